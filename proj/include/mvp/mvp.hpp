/*
 * Copyright (c) 2026, the mvp authors.  All rights reserved.
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
#ifndef MVP_MVP_HPP_
#define MVP_MVP_HPP_

#include "mvp/ablate.hpp"
#include "mvp/attention.hpp"
#include "mvp/audit.hpp"
#include "mvp/autodiff.hpp"
#include "mvp/checkpoint.hpp"
#include "mvp/config.hpp"
#include "mvp/data.hpp"
#include "mvp/decoder.hpp"
#include "mvp/encoder.hpp"
#include "mvp/error.hpp"
#include "mvp/metrics.hpp"
#include "mvp/model.hpp"
#include "mvp/objectives.hpp"
#include "mvp/params.hpp"
#include "mvp/pipeline.hpp"
#include "mvp/rng.hpp"
#include "mvp/tensor.hpp"
#include "mvp/trainer.hpp"
#include "mvp/vocab.hpp"

#endif  // MVP_MVP_HPP_
