/*
 * Copyright 2026 The trainsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace trainsel
{

/// Base of every error thrown by the library. The CLI maps the concrete
/// type to a process exit code.
class Error : public std::runtime_error
{
   public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (bad shape, out-of-range parameter).
class ContractError : public Error
{
   public:
    using Error::Error;
};

/// Input data is well-formed but semantically invalid (duplicate id,
/// unknown id, non-numeric cell).
class DataError : public Error
{
   public:
    using Error::Error;
};

/// Input file could not be parsed. Carries the 1-based line and column.
class FormatError : public DataError
{
   public:
    FormatError(const std::string& what, std::size_t line, std::size_t column)
        : DataError(what), line_(line), column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

   private:
    std::size_t line_;
    std::size_t column_;
};

/// Input carries no usable signal (all-constant markers, constant
/// phenotype).
class DegenerateInputError : public DataError
{
   public:
    using DataError::DataError;
};

class IoError : public DataError
{
   public:
    using DataError::DataError;
};

/// Exhaustive enumeration refused because the subset count exceeds the
/// configured limit.
class RefusalError : public ContractError
{
   public:
    RefusalError(const std::string& what, double count)
        : ContractError(what), count_(count)
    {
    }

    double count() const noexcept { return count_; }

   private:
    double count_;
};

/// A factorization or eigensolve failed where the math says it should not.
class NumericalError : public Error
{
   public:
    using Error::Error;
};

/// Process exit code for an exception: 1 usage/contract, 2 data,
/// 3 numerical.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace trainsel
