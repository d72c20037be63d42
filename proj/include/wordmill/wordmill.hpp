/*
 * Copyright 2026 The Wordmill Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "wordmill/corpus.hpp"
#include "wordmill/dict.hpp"
#include "wordmill/eval.hpp"
#include "wordmill/formats.hpp"
#include "wordmill/hash.hpp"
#include "wordmill/langid.hpp"
#include "wordmill/math.hpp"
#include "wordmill/model.hpp"
#include "wordmill/rng.hpp"
#include "wordmill/trainer.hpp"
#include "wordmill/utf8.hpp"
