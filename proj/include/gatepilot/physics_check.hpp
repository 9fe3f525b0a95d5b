#pragma once

#include <string>
#include <vector>

namespace gatepilot {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Self-test of the lag simulator: step-response fidelity against the continuous
/// first-order solution, unity DC gain, boundedness, seeded determinism and
/// zero-noise equivalence.
std::vector<CheckResult> run_physics_checks();

}  // namespace gatepilot
