// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace isac {

/// Invalid or inconsistent configuration (bad JSON, violated invariants, non-finite values).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (zero antennas, zero distance, zero combiner).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dimension mismatch or rank condition that makes an operation undefined.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown (singular matrix, ill-conditioned basis).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A violated precondition on an optimization input.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The sensing requirement cannot be met at full transmit power.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, double max_scnr)
        : std::runtime_error(what), max_scnr_(max_scnr) {}

    /// Largest SCNR (linear) reachable under the power budget.
    double max_scnr() const noexcept { return max_scnr_; }

private:
    double max_scnr_;
};

/// Mismatched tables handed to the aggregator.
class AggregationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace isac
