// Copyright 2026 The icschaos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace icschaos {

// All library failures derive from Error so callers can catch one type at
// the CLI boundary and still dispatch on the concrete kind.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define ICSCHAOS_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

ICSCHAOS_DEFINE_ERROR(InvalidArgument);
ICSCHAOS_DEFINE_ERROR(DimensionMismatch);
ICSCHAOS_DEFINE_ERROR(EigenSolveFailure);
ICSCHAOS_DEFINE_ERROR(NonFiniteState);
ICSCHAOS_DEFINE_ERROR(UnknownVariable);
ICSCHAOS_DEFINE_ERROR(EmptyWindow);
ICSCHAOS_DEFINE_ERROR(Infeasible);
ICSCHAOS_DEFINE_ERROR(NoConvergence);
ICSCHAOS_DEFINE_ERROR(ConditionViolated);
ICSCHAOS_DEFINE_ERROR(UnknownRoute);
ICSCHAOS_DEFINE_ERROR(UnknownTarget);
ICSCHAOS_DEFINE_ERROR(ConfigError);

#undef ICSCHAOS_DEFINE_ERROR

}  // namespace icschaos
