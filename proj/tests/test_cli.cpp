#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result tasekit(const std::string& args) {
    std::string cmd = std::string(TASEKIT_BINARY) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

/// Data row of a one-row CSV block keyed by the header line.
std::string field(const std::string& out, const std::string& header_start, const std::string& column) {
    std::stringstream ss(out);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.rfind(header_start, 0) != 0) continue;
        auto names = split(line, ',');
        std::string row;
        std::getline(ss, row);
        auto values = split(row, ',');
        for (std::size_t i = 0; i < names.size() && i < values.size(); ++i)
            if (names[i] == column) return values[i];
    }
    return {};
}

double metadata(const std::string& out, const std::string& key) {
    std::string tag = "# " + key + "=";
    auto pos = out.find(tag);
    REQUIRE(pos != std::string::npos);
    return std::stod(out.substr(pos + tag.size()));
}

}  // namespace

TEST_CASE("alpha table") {
    auto r = tasekit("alpha-table");
    CHECK(r.code == 0);
    CHECK(r.out.find("0.40   1.20   2.80") != std::string::npos);
    CHECK(r.out.find("0.36   1.08   2.51   5.38") != std::string::npos);
    CHECK(r.out.find("RK1       2.00   0.50\n") != std::string::npos);
}

TEST_CASE("stiff ODE run stays bounded") {
    auto r = tasekit("run-case --case ode-stiff --scheme ERK2 --tase 2 --dt-ratio 1e4");
    CHECK(r.code == 0);
    CHECK(field(r.out, "steps,", "diverged") == "false");
    CHECK(std::stod(field(r.out, "steps,", "max_norm")) <= 1.0);
}

TEST_CASE("divergence is reported as data") {
    auto polar = tasekit("run-case --case polar --scheme ERK2 --tase 0 --dt 2e-3");
    CHECK(polar.code == 0);
    CHECK(field(polar.out, "steps,", "diverged") == "true");
    auto periodic = tasekit("run-case --case diffusion-periodic --tase 0 --dt-ratio 1.1");
    CHECK(periodic.code == 0);
    CHECK(field(periodic.out, "steps,", "diverged") == "true");
}

TEST_CASE("configuration errors exit with code 2") {
    CHECK(tasekit("run-case --case nope").code == 2);
    CHECK(tasekit("run-case --case ode-linear --scheme ERK9").code == 2);
    CHECK(tasekit("run-case --case ode-linear --tase 7").code == 2);
    CHECK(tasekit("run-case --case ode-linear --split-mode split").code == 2);
    CHECK(tasekit("no-such-command").code == 2);
}

TEST_CASE("convergence studies") {
    auto euler = tasekit("converge --case ode-linear --scheme ERK1 --tase 0");
    CHECK(euler.code == 0);
    CHECK(metadata(euler.out, "observed_order_linf") == doctest::Approx(1.0).epsilon(0.1));

    auto fourier = tasekit("converge --case diffusion-periodic --differencing fourier --n 6 --scheme ERK2 --tase 2 --t-final 2 --steps 100");
    CHECK(fourier.code == 0);
    CHECK(metadata(fourier.out, "observed_order_linf") == doctest::Approx(2.0).epsilon(0.125));

    // the decayed transient meets round-off near 1e-12, so the fit stops short of the asymptote
    auto steady = tasekit("converge --case steady-state --scheme ERK4 --tase 4 --steps 240 --points 3");
    CHECK(steady.code == 0);
    CHECK(metadata(steady.out, "observed_order_linf") >= 3.5);
}

TEST_CASE("imaginary axis scan") {
    auto r = tasekit("imag-scan --scheme ERK4 --tase 4 --alpha 5.38 --ymax 1e8 --samples 20000");
    CHECK(r.code == 0);
    CHECK(r.out.find("y,abs_sigma") != std::string::npos);
    double peak = metadata(r.out, "max_abs_sigma");
    CHECK(peak > 1.0);
    CHECK(peak <= 1.03);
}

TEST_CASE("stability maps") {
    auto stable = tasekit("stability-map --scheme ERK2 --tase 2 --grid 101");
    CHECK(stable.code == 0);
    CHECK(stable.out.find("re,im,abs_sigma") != std::string::npos);
    CHECK(metadata(stable.out, "left_half_plane_unstable_cells") == 0.0);
    auto unstable = tasekit("stability-map --scheme ERK4 --tase 4 --alpha 1.344 --grid 101");
    CHECK(unstable.code == 0);
    CHECK(metadata(unstable.out, "left_half_plane_unstable_cells") > 0.0);
}

TEST_CASE("identical configurations give identical output") {
    std::string args = "run-case --case diffusion-dirichlet --scheme ERK3 --tase 3 --seed 4";
    CHECK(tasekit(args).out == tasekit(args).out);
}
