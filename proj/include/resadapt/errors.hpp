/*
 * Copyright (c) 2026, The resadapt Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace resadapt {

// Root of every error the library raises. `kind()` is the stable name used in
// structured CLI error output.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define RESADAPT_DEFINE_ERROR(Name)                                       \
    class Name : public Error {                                            \
    public:                                                                \
        using Error::Error;                                                \
        const char* kind() const noexcept override { return #Name; }       \
    }

RESADAPT_DEFINE_ERROR(FormatError);
RESADAPT_DEFINE_ERROR(ValidationError);
RESADAPT_DEFINE_ERROR(IoError);
RESADAPT_DEFINE_ERROR(ArgumentError);
RESADAPT_DEFINE_ERROR(ShapeError);
RESADAPT_DEFINE_ERROR(DegenerateFeatureError);

#undef RESADAPT_DEFINE_ERROR

class InsufficientShotsError : public Error {
public:
    InsufficientShotsError(std::size_t class_index, std::string class_name, std::size_t available,
                           std::size_t requested)
        : Error("class " + std::to_string(class_index) + " ('" + class_name + "') has " +
                std::to_string(available) + " train images, " + std::to_string(requested) +
                " shots requested"),
          class_index_(class_index), class_name_(std::move(class_name)) {}

    const char* kind() const noexcept override { return "InsufficientShotsError"; }
    std::size_t class_index() const noexcept { return class_index_; }
    const std::string& class_name() const noexcept { return class_name_; }

private:
    std::size_t class_index_;
    std::string class_name_;
};

class DivergenceError : public Error {
public:
    DivergenceError(std::size_t epoch, std::size_t batch)
        : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch)),
          epoch_(epoch), batch_(batch) {}

    explicit DivergenceError(const std::string& what) : Error(what) {}

    const char* kind() const noexcept override { return "DivergenceError"; }
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_ = 0;
    std::size_t batch_ = 0;
};

}  // namespace resadapt
