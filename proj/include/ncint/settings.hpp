#pragma once

namespace ncint {

// Solver settings shared by the library surface and the CLI.
struct Settings {
    int k_out = 8;        // coefficient degree of synthesized interpolants
    int depth_cap = 200;  // level cap for series summation
    double tol_psd = 1e-9;
    double tol_interp = 1e-6;
    double tol_series = 1e-9;
};

} // namespace ncint
