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

#include "trainsel/errors.h"

namespace trainsel
{

int exit_code_for(const std::exception& e) noexcept
{
    if (dynamic_cast<const ContractError*>(&e) != nullptr)
    {
        return 1;
    }
    if (dynamic_cast<const DataError*>(&e) != nullptr)
    {
        return 2;
    }
    if (dynamic_cast<const NumericalError*>(&e) != nullptr)
    {
        return 3;
    }
    return 3;
}

}  // namespace trainsel
