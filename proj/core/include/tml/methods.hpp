// Benchmark method catalogue: builds MethodSpec entries (with their inner
// cross-validated hyperparameter grids) from a RunConfig.
#pragma once

#include <string>
#include <vector>

#include "tml/bench.hpp"
#include "tml/io.hpp"

namespace tml {

// Known names: knn, mmc-nn, tml-nn, l-svm, r-svm, tml-svm, ktml-svm.
// Throws std::invalid_argument for anything else.
MethodSpec make_method(const std::string& name, const RunConfig& config);

std::vector<std::string> known_methods();

}  // namespace tml
