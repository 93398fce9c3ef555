// checks.hpp — the built-in acceptance assertions, one function per criterion

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oqs::checks {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double value = 0.0;     // the headline metric compared against the tolerance
    double tolerance = 0.0;
    std::string detail;     // supporting numbers, one line
};

CheckResult toy_means_L();              // 1
CheckResult toy_means_Lprime();         // 2
CheckResult perturbative_order();       // 3
CheckResult transformed_equivalence();  // 4
CheckResult inequivalence();            // 5
CheckResult kernel_cosine();            // 6
CheckResult kernel_sine();              // 7
CheckResult integration_by_parts();     // 8
CheckResult brem_stationarity();        // 9
CheckResult decoherence_coefficient();  // 10
CheckResult structural_suite(std::uint64_t seed = 20240611); // 11

constexpr int check_count = 11;

// Runs criterion `id` (1..check_count); InvalidParameter otherwise.
CheckResult run_check(int id, std::uint64_t seed = 20240611);

// "criterion  N  PASS  name  value=... tol=...  detail"
std::string format(const CheckResult& r);

} // namespace oqs::checks
