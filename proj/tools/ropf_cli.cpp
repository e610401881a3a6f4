#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ropf/harness.hpp"
#include "ropf/kernels.hpp"
#include "ropf/network.hpp"
#include "ropf/oracle.hpp"

namespace {

using namespace ropf;

int cmd_solve(const std::string& net_path, const SolveConfig& config,
              const std::string& trace_path, const std::string& out_path) {
    RadialNetwork net;
    try {
        net = load_network_file(net_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::ofstream trace_os;
    if (!trace_path.empty()) {
        trace_os.open(trace_path);
        if (!trace_os) {
            std::cerr << "error: cannot open trace file " << trace_path << "\n";
            return 1;
        }
        trace_os << "iter,r,s,objective\n";
        trace_os.precision(17);
    }

    Engine engine(net, config);
    const double tol = config.tol_scale * std::sqrt(static_cast<double>(net.n_buses));
    SolveStatus status = SolveStatus::MaxIters;
    double r = 0, s = 0;
    for (int k = 0; k < config.max_iters; ++k) {
        std::tie(r, s) = engine.round();
        if (trace_os.is_open()) {
            trace_os << engine.iter() << ',' << r << ',' << s << ',' << engine.objective()
                     << '\n';
            trace_os.flush();  // interrupted runs keep a usable partial trace
        }
        if (r <= tol && s <= tol) {
            status = SolveStatus::Converged;
            break;
        }
    }

    Solution sol = engine.extract_solution();
    sol.r = r;
    sol.s_res = s;
    sol.status = status;

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot open output file " << out_path << "\n";
            return 1;
        }
        out << solution_document(sol, net);
    }

    double max_gap = 0.0;
    for (double g : exactness_gap(sol, net)) max_gap = std::max(max_gap, std::abs(g));
    std::cout << "status: " << (status == SolveStatus::Converged ? "converged" : "max_iters")
              << "\niterations: " << sol.iterations << "\nprimal_residual: " << r
              << "\ndual_residual: " << s
              << "\nobjective: " << solution_objective(sol, net)
              << "\nmax_exactness_gap: " << max_gap
              << "\nflow_residual: " << flow_residual(sol, net) << "\n";
    return status == SolveStatus::Converged ? 0 : 2;
}

int cmd_generate(const std::string& topology, int size, std::uint64_t seed,
                 const std::string& out_path) {
    if (size < 2) {
        std::cerr << "error: size must be >= 2\n";
        return 1;
    }
    LoadProfile profile;
    profile.seed = seed;
    RadialNetwork net;
    try {
        if (topology == "line") {
            net = gen_line(size, profile);
        } else if (topology == "fattree") {
            net = gen_fat_tree(size, profile);
        } else if (topology == "randomtree") {
            net = gen_random_tree(size, profile);
        } else {
            std::cerr << "error: unknown topology " << topology << "\n";
            return 1;
        }
        if (out_path.empty()) {
            std::cout << save_network(net);
        } else {
            save_network_file(net, out_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

ConeBoxQP random_cone_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coeff(-5.0, 5.0);
    std::uniform_real_distribution<double> k_dist(0.3, 2.0);
    std::uniform_real_distribution<double> lo_dist(0.1, 2.5);
    std::uniform_real_distribution<double> width(0.0, 0.5);
    ConeBoxQP qp;
    qp.c1 = coeff(rng);
    qp.c2 = coeff(rng);
    qp.c3 = coeff(rng);
    qp.c4 = coeff(rng);
    qp.k = k_dist(rng);
    qp.z3_lo = lo_dist(rng);
    qp.z3_hi = std::min(3.0, qp.z3_lo + width(rng));
    return qp;
}

DiskQP random_disk(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a_dist(0.5, 3.0);
    std::uniform_real_distribution<double> b_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> c_dist(0.2, 2.0);
    return {a_dist(rng), a_dist(rng), b_dist(rng), b_dist(rng), c_dist(rng)};
}

EqQP random_eq_qp(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_dist(2, 8);
    std::uniform_real_distribution<double> a_dist(0.5, 3.0);
    std::uniform_real_distribution<double> e_dist(-2.0, 2.0);
    while (true) {
        const int n = n_dist(rng);
        std::uniform_int_distribution<int> m_dist(1, n - 1);
        const int m = m_dist(rng);
        EqQP qp;
        qp.a_diag.resize(n);
        qp.c.resize(n);
        qp.B.resize(m, n);
        for (int i = 0; i < n; ++i) qp.a_diag(i) = a_dist(rng);
        for (int i = 0; i < n; ++i) qp.c(i) = e_dist(rng);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) qp.B(i, j) = e_dist(rng);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(qp.B.transpose());
        if (qr.rank() == m) return qp;
    }
}

std::string repr(const ConeBoxQP& qp) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "ConeBoxQP{c=(%.17g,%.17g,%.17g,%.17g), k=%.17g, box=[%.17g,%.17g]}",
                  qp.c1, qp.c2, qp.c3, qp.c4, qp.k, qp.z3_lo, qp.z3_hi);
    return buf;
}

std::string repr(const DiskQP& qp) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "DiskQP{a=(%.17g,%.17g), b=(%.17g,%.17g), c=%.17g}",
                  qp.a1, qp.a2, qp.b1, qp.b2, qp.c);
    return buf;
}

int cmd_kernel_check(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    OracleConfig oc;
    double max_gap = 0.0, max_violation = 0.0;
    const double gap_tol = 1e-6, feas_tol = 1e-8;

    for (int i = 0; i < count; ++i) {
        const ConeBoxQP qp = random_cone_box(rng);
        const ConeBoxSolution sol = solve_cone_box_qp(qp);
        const double obj = cone_box_objective(qp, sol.z1, sol.z2, sol.z3, sol.z4);
        const double gap = obj - oracle_cone_box(qp, oc).objective;
        const double cone =
            (sol.z1 * sol.z1 + sol.z2 * sol.z2) / sol.z3 - qp.k * qp.k * sol.z4;
        const double viol = std::max({0.0, cone, qp.z3_lo - sol.z3, sol.z3 - qp.z3_hi});
        max_gap = std::max(max_gap, gap);
        max_violation = std::max(max_violation, viol);
        if (gap > gap_tol || viol > feas_tol) {
            std::cerr << "cone-box check failed: gap=" << gap << " viol=" << viol << "\n  "
                      << repr(qp) << "\n";
            return 3;
        }
    }

    for (int i = 0; i < count; ++i) {
        const DiskQP qp = random_disk(rng);
        const auto [p, q] = solve_disk_qp(qp);
        const double gap = disk_objective(qp, p, q) - oracle_disk(qp, oc).objective;
        const double viol = std::max({0.0, -p, std::hypot(p, q) - qp.c});
        max_gap = std::max(max_gap, gap);
        max_violation = std::max(max_violation, viol);
        if (gap > gap_tol || viol > feas_tol) {
            std::cerr << "disk check failed: gap=" << gap << " viol=" << viol << "\n  "
                      << repr(qp) << "\n";
            return 3;
        }
    }

    for (int i = 0; i < count; ++i) {
        const EqQP qp = random_eq_qp(rng);
        const Eigen::VectorXd x = solve_eq_qp(qp);
        // Independent reference: full dense KKT system.
        const int n = static_cast<int>(qp.c.size());
        const int m = static_cast<int>(qp.B.rows());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
        kkt.topLeftCorner(n, n) = qp.a_diag.asDiagonal();
        kkt.topRightCorner(n, m) = qp.B.transpose();
        kkt.bottomLeftCorner(m, n) = qp.B;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
        rhs.head(n) = -qp.c;
        const Eigen::VectorXd ref = kkt.fullPivLu().solve(rhs).head(n);
        auto obj_of = [&](const Eigen::VectorXd& y) {
            return 0.5 * y.dot(qp.a_diag.asDiagonal() * y) + qp.c.dot(y);
        };
        const double gap = obj_of(x) - obj_of(ref);
        const double viol = (qp.B * x).cwiseAbs().maxCoeff();
        max_gap = std::max(max_gap, gap);
        max_violation = std::max(max_violation, viol);
        if (gap > gap_tol || viol > feas_tol) {
            std::cerr << "eq-qp check failed: gap=" << gap << " viol=" << viol << "\n";
            return 3;
        }
    }

    std::cout << "checked " << count << " instances per kernel family\nmax_objective_gap: "
              << max_gap << "\nmax_feasibility_violation: " << max_violation << "\n";
    return 0;
}

void report_timings(const std::string& name, std::vector<double>& us) {
    std::sort(us.begin(), us.end());
    const double mean =
        us.empty() ? 0.0 : std::accumulate(us.begin(), us.end(), 0.0) / us.size();
    const double median = us.empty() ? 0.0 : us[us.size() / 2];
    const double p99 = us.empty() ? 0.0 : us[std::min(us.size() - 1,
                                                      static_cast<std::size_t>(us.size() * 0.99))];
    std::cout << name << ": mean " << mean << " us, median " << median << " us, p99 " << p99
              << " us\n";
}

int cmd_bench(int count, std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> kids(0, 10);
    std::uniform_real_distribution<double> e_dist(-1.0, 1.0);

    std::vector<double> eq_us, cone_us, disk_us;
    eq_us.reserve(count);
    cone_us.reserve(count);
    disk_us.reserve(count);
    double sink = 0.0;

    for (int i = 0; i < count; ++i) {
        // x-update-sized instance: 7 own variables plus 3 per child, with
        // one voltage-drop and two balance rows per bus.
        const int nc = kids(rng);
        const int n = 7 + 3 * nc;
        const int m = 3;
        EqQP qp;
        qp.a_diag = Eigen::VectorXd::Constant(n, 1.0);
        qp.c.resize(n);
        for (int j = 0; j < n; ++j) qp.c(j) = e_dist(rng);
        qp.B = Eigen::MatrixXd::Zero(m, n);
        for (int r = 0; r < m; ++r) {
            for (int j = 0; j < n; ++j) qp.B(r, j) = e_dist(rng) * 0.1;
            qp.B(r, r) = 1.0;
        }
        const auto t0 = clock::now();
        sink += solve_eq_qp(qp)(0);
        eq_us.push_back(std::chrono::duration<double, std::micro>(clock::now() - t0).count());
    }
    for (int i = 0; i < count; ++i) {
        const ConeBoxQP qp = random_cone_box(rng);
        const auto t0 = clock::now();
        sink += solve_cone_box_qp(qp).z3;
        cone_us.push_back(std::chrono::duration<double, std::micro>(clock::now() - t0).count());
    }
    for (int i = 0; i < count; ++i) {
        const DiskQP qp = random_disk(rng);
        const auto t0 = clock::now();
        sink += solve_disk_qp(qp).first;
        disk_us.push_back(std::chrono::duration<double, std::micro>(clock::now() - t0).count());
    }
    if (sink == 0.12345) std::cout << "";  // keep results observed

    report_timings("solve_eq_qp", eq_us);
    report_timings("solve_cone_box_qp", cone_us);
    report_timings("solve_disk_qp", disk_us);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed SOCP relaxation solver for radial power networks"};
    app.require_subcommand(1);

    SolveConfig config;
    config.parallelism = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string net_path, trace_path, out_path;
    auto* solve = app.add_subcommand("solve", "Run the distributed solver on a network file");
    solve->add_option("network", net_path, "Network JSON file")->required();
    solve->add_option("--rho", config.rho, "ADMM penalty parameter");
    solve->add_option("--tol-scale", config.tol_scale, "Residual tolerance per sqrt(bus)");
    solve->add_option("--max-iters", config.max_iters, "Iteration cap");
    solve->add_option("--parallelism", config.parallelism, "Worker threads");
    solve->add_option("--trace", trace_path, "Write per-iteration CSV here");
    solve->add_option("--out", out_path, "Write solution JSON here");

    std::string topology;
    int size = 0;
    std::uint64_t seed = 1;
    std::string gen_out;
    auto* generate = app.add_subcommand("generate", "Generate a synthetic network");
    generate->add_option("topology", topology, "line | fattree | randomtree")->required();
    generate->add_option("size", size, "Number of buses")->required();
    generate->add_option("--seed", seed, "Generator seed");
    generate->add_option("--out", gen_out, "Output path (default stdout)");

    int count = 1000;
    std::uint64_t check_seed = 1;
    auto* check = app.add_subcommand("kernel-check", "Randomized kernel-vs-oracle comparison");
    check->add_option("--count", count, "Instances per kernel family");
    check->add_option("--seed", check_seed, "RNG seed");

    int bench_count = 10000;
    std::uint64_t bench_seed = 1;
    auto* bench = app.add_subcommand("bench", "Measure kernel latency");
    bench->add_option("--count", bench_count, "Instances per kernel");
    bench->add_option("--seed", bench_seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) return cmd_solve(net_path, config, trace_path, out_path);
        if (generate->parsed()) return cmd_generate(topology, size, seed, gen_out);
        if (check->parsed()) return cmd_kernel_check(count, check_seed);
        if (bench->parsed()) return cmd_bench(bench_count, bench_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
