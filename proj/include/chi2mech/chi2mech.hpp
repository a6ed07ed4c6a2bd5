// Copyright 2026 The chi2mech Authors
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

// Convenience header pulling in the whole library.

#ifndef CHI2MECH_CHI2MECH_HPP_
#define CHI2MECH_CHI2MECH_HPP_

#include "chi2mech/adversary.hpp"
#include "chi2mech/designer.hpp"
#include "chi2mech/error.hpp"
#include "chi2mech/linalg.hpp"
#include "chi2mech/mechanism.hpp"
#include "chi2mech/oracle.hpp"
#include "chi2mech/probcore.hpp"
#include "chi2mech/provider.hpp"

#endif  // CHI2MECH_CHI2MECH_HPP_
