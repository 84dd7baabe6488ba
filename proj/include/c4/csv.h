// Copyright 2026 The C4 Toolkit Authors
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

#ifndef C4_CSV_H_
#define C4_CSV_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace c4 {

// Shortest text that parses back to the same double; always 17 significant
// digits so that output bytes depend only on the value.
std::string FormatDouble(double value);

// Joins already-formatted cells with commas.
std::string CsvRow(const std::vector<std::string>& cells);

// Reads a headerless CSV of doubles, one entity per row. Throws
// ValidationError on an empty file, ragged rows or a non-numeric cell.
Eigen::MatrixXd ReadNumericCsv(const std::string& path);

// Parses a comma-separated list of doubles ("0.1,0.2,0.3").
std::vector<double> ParseDoubleList(const std::string& text);

}  // namespace c4

#endif  // C4_CSV_H_
