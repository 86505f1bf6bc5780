/*
 * Copyright 2026 The hyptree Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HYPTREE_HYPTREE_HPP_
#define HYPTREE_HYPTREE_HPP_

#include "hyptree/booster.hpp"
#include "hyptree/data.hpp"
#include "hyptree/evaluate.hpp"
#include "hyptree/loss.hpp"
#include "hyptree/nulltest.hpp"
#include "hyptree/report.hpp"
#include "hyptree/rng.hpp"
#include "hyptree/tree.hpp"

#endif  // HYPTREE_HYPTREE_HPP_
