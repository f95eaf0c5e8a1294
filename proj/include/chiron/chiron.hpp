// Copyright 2026 The Chiron Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHIRON_CHIRON_HPP_
#define CHIRON_CHIRON_HPP_

#include "chiron/corpus.hpp"
#include "chiron/error.hpp"
#include "chiron/generation.hpp"
#include "chiron/llm.hpp"
#include "chiron/llm_cache.hpp"
#include "chiron/llm_http.hpp"
#include "chiron/llm_mock.hpp"
#include "chiron/metrics.hpp"
#include "chiron/parallel.hpp"
#include "chiron/pipeline.hpp"
#include "chiron/prediction.hpp"
#include "chiron/sheet.hpp"
#include "chiron/templates.hpp"
#include "chiron/text.hpp"
#include "chiron/validation.hpp"

#endif  // CHIRON_CHIRON_HPP_
