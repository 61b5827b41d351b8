//
// Copyright 2026 The filaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FILAUDIT_FIL_HPP
#define FILAUDIT_FIL_HPP

#include "fil/attacks.hpp"
#include "fil/dataset.hpp"
#include "fil/fil_engine.hpp"
#include "fil/glm.hpp"
#include "fil/irfil.hpp"
#include "fil/mechanism.hpp"
#include "fil/oracle.hpp"
#include "fil/parallel.hpp"
#include "fil/random.hpp"
#include "fil/report.hpp"
#include "fil/synthbench.hpp"

#endif  // FILAUDIT_FIL_HPP
