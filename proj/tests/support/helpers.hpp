#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <Eigen/Dense>

#include "freeop/io.hpp"

namespace testsupport {

inline std::string fixture(const std::string& rel) {
    return std::string(FREEOP_FIXTURE_DIR) + "/" + rel;
}

inline std::string tmp_dir() {
    std::filesystem::create_directories(FREEOP_TMP_DIR);
    return FREEOP_TMP_DIR;
}

inline std::string tmp_path(const std::string& name) { return tmp_dir() + "/" + name; }

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the installed command line binary with stdout/stderr captured.
inline CliResult run_cli(const std::string& args) {
    static int counter = 0;
    ++counter;
    std::string out_path = tmp_path("cli_stdout_" + std::to_string(counter) + ".txt");
    std::string err_path = tmp_path("cli_stderr_" + std::to_string(counter) + ".txt");
    std::string cmd =
        std::string(FREEOP_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = freeop::read_file(out_path);
    r.err = freeop::read_file(err_path);
    return r;
}

// Second route for the matrix exponential: a plain truncated series with no
// scaling, squaring, or adaptive order. Thirty terms leave a remainder below
// norm^31/31!, which is under 1e-12 for the norms used in tests.
inline Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a, int terms = 30) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    for (int k = 1; k <= terms; ++k) {
        term = (term * a) / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

// Chi-square upper 0.001 quantiles for small degrees of freedom.
inline double chi2_crit_999(size_t dof) {
    switch (dof) {
        case 1: return 10.8276;
        case 2: return 13.8155;
        case 3: return 16.2662;
        case 4: return 18.4668;
        case 5: return 20.5150;
        default: break;
    }
    // Wilson-Hilferty approximation with z for p = 0.999.
    double z = 3.090232306167813;
    double d = static_cast<double>(dof);
    double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
    return d * t * t * t;
}

// Test-local splitmix64, independent of the library's stream type.
struct LocalRand {
    uint64_t state;

    explicit LocalRand(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

} // namespace testsupport
