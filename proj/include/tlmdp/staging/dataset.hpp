#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tlmdp/staging/factors.hpp"

namespace tlmdp::staging {

// One JSON object per line:
//   {"id": ..., "text": ..., "device": ..., "subject": ..., "vehicle": ...,
//    "theme": ..., "emotion": ..., "subject_keywords": [...],
//    "vehicle_keywords": [...]}
// Blank lines are skipped. Unknown fields, duplicate ids and malformed
// records raise InputError with the line number.
std::vector<RhetoricalInput> read_dataset(std::istream& in);
std::vector<RhetoricalInput> load_dataset(const std::string& path);
void write_dataset(std::ostream& out, const std::vector<RhetoricalInput>& inputs);

}  // namespace tlmdp::staging
