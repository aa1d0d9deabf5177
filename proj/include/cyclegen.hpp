/*
 * Copyright (c) 2026, cyclegen contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "cyclegen/coupled.hpp"
#include "cyclegen/dataset.hpp"
#include "cyclegen/error.hpp"
#include "cyclegen/evaluation.hpp"
#include "cyclegen/fixture.hpp"
#include "cyclegen/io.hpp"
#include "cyclegen/metrics.hpp"
#include "cyclegen/model_io.hpp"
#include "cyclegen/nn.hpp"
#include "cyclegen/pipeline.hpp"
#include "cyclegen/plot.hpp"
#include "cyclegen/random.hpp"
#include "cyclegen/tuner.hpp"
#include "cyclegen/types.hpp"
