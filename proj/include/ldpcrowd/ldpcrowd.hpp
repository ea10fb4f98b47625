//
// Copyright 2026 The ldpcrowd Authors
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

#ifndef LDPCROWD_LDPCROWD_HPP_
#define LDPCROWD_LDPCROWD_HPP_

#include "ldpcrowd/audit.hpp"
#include "ldpcrowd/bounds.hpp"
#include "ldpcrowd/core.hpp"
#include "ldpcrowd/csv.hpp"
#include "ldpcrowd/data.hpp"
#include "ldpcrowd/experiment.hpp"
#include "ldpcrowd/inference.hpp"
#include "ldpcrowd/json_io.hpp"
#include "ldpcrowd/mechanisms.hpp"
#include "ldpcrowd/random.hpp"

#endif  // LDPCROWD_LDPCROWD_HPP_
