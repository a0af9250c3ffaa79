#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include <flowstab/acceptance.hpp>
#include <flowstab/io.hpp>

namespace fs = std::filesystem;
using namespace flowstab;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double lap() {
    const auto t1 = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
    return s;
  }
};

OperatorPair build_pair(const RunConfig& cfg) {
  const Grid g = build_grid(cfg.geometry);
  return assemble(g, cfg.physics, build_ambient_field(cfg.s, g));
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

// --refine K runs the same job on K nested grids, doubling the resolution
void for_levels(const RunConfig& base, int levels,
                const std::function<void(const RunConfig&, const std::string&)>& job) {
  RunConfig cfg = base;
  for (int l = 0; l < levels; ++l) {
    const std::string suffix =
        levels == 1 ? "" : "_nx" + std::to_string(cfg.geometry.nx);
    job(cfg, suffix);
    cfg.geometry.nx *= 2;
    cfg.geometry.ny *= 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear flow-structure stability laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_flag;
  std::uint64_t seed_flag = 0;
  double beta_max_flag = 0.0;
  int refine = 1;
  bool print_config = false;
  app.add_option("--config", config_path, "configuration file (dotted keys)");
  app.add_option("--out", out_flag, "output directory (overrides output.dir)");
  auto* seed_opt = app.add_option("--seed", seed_flag, "override evolution.seed");
  auto* bmax_opt = app.add_option("--beta-max", beta_max_flag, "override sweep.beta_max");
  app.add_option("--refine", refine, "run on this many nested grids")
      ->check(CLI::Range(1, 6));
  app.add_flag("--print-config", print_config, "print the effective configuration");

  auto* c_assemble = app.add_subcommand("assemble", "build the operator pair");
  bool dump_ops = false;
  c_assemble->add_flag("--dump-operators", dump_ops, "export G and K in Matrix Market form");
  auto* c_null = app.add_subcommand("nullspace", "steady state and its residuals");
  auto* c_spectrum = app.add_subcommand("spectrum", "eigenvalues near a shift");
  double shift_re = 0.0, shift_im = 0.0;
  int eig_count = 10;
  auto* sre = c_spectrum->add_option("--shift-re", shift_re, "shift real part");
  auto* sim = c_spectrum->add_option("--shift-im", shift_im, "shift imaginary part");
  c_spectrum->add_option("-k,--count", eig_count, "eigenvalues requested");
  auto* c_sweep = app.add_subcommand("sweep", "resolvent norms along the imaginary axis");
  bool plot = false;
  c_sweep->add_flag("--plot", plot, "emit an SVG plot");
  auto* c_sim = app.add_subcommand("simulate", "time integration of a random state");
  c_sim->add_flag("--plot", plot, "emit an SVG plot");
  double T_flag = 0.0, dt_flag = 0.0;
  auto* topt = c_sim->add_option("--T", T_flag, "override evolution.T");
  auto* dtopt = c_sim->add_option("--dt", dt_flag, "override evolution.dt");
  auto* c_verify = app.add_subcommand("verify", "run the acceptance suite");
  std::vector<int> criteria;
  c_verify->add_option("criteria", criteria, "criteria to run (default all)");
  auto* c_stokes = app.add_subcommand("stokes-check", "manufactured-solution convergence");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_flag.empty()) cfg.out_dir = out_flag;
    if (*seed_opt) cfg.seed = seed_flag;
    if (*bmax_opt) cfg.beta_max = beta_max_flag;
    if (print_config) std::cout << write_config(cfg);
    fs::create_directories(cfg.out_dir);

    if (*c_assemble) {
      for_levels(cfg, refine, [&](const RunConfig& c, const std::string& sfx) {
        Timer tm;
        const OperatorPair pair = build_pair(c);
        ManifestBuilder man(c);
        man.timing("assemble" + sfx, tm.lap());
        man.scalar("n_total" + sfx, pair.n);
        man.scalar("n_pressure" + sfx, pair.sizes.n_p);
        man.scalar("n_velocity_free" + sfx, static_cast<int>(pair.free_dofs.size()));
        man.scalar("n_beam" + sfx, 2 * pair.sizes.n_w);
        const VecC x0 = pair.gather(null_vector(pair));
        const double r0 = reduced_norm(pair, solve_G(pair, apply_real(pair.Kr, x0))) /
                          reduced_norm(pair, x0);
        man.scalar("null_residual" + sfx, r0);
        if (dump_ops) {
          const std::string gp = out_path(c, "G" + sfx + ".mtx");
          const std::string kp = out_path(c, "K" + sfx + ".mtx");
          export_matrix_market(gp, pair.Gr, "energy Gram matrix");
          export_matrix_market(kp, pair.Kr, "generator numerator matrix");
          man.file(gp);
          man.file(kp);
        }
        man.timing("diagnostics" + sfx, tm.lap());
        man.write(out_path(c, "manifest_assemble" + sfx + ".json"));
        std::cout << "assembled" << sfx << ": n = " << pair.n
                  << ", null residual = " << fmt17(r0) << "\n";
      });
    } else if (*c_null) {
      const OperatorPair pair = build_pair(cfg);
      Timer tm;
      ManifestBuilder man(cfg);
      const StateVector v0 = null_vector(pair);
      const VecC x0 = pair.gather(v0);
      const double n0 = reduced_norm(pair, x0);
      const double fwd =
          reduced_norm(pair, solve_G(pair, apply_real(pair.Kr, x0))) / n0;
      const double adj =
          reduced_norm(pair, solve_G(pair, apply_real(assemble_adjoint(pair), x0))) / n0;
      const double mid = v0.w1[beam_value_dof(pair.grid.geo.nx / 2)].real();
      const std::string sp = out_path(cfg, "null_state.json");
      save_state(sp, v0);
      man.file(sp);
      man.scalar("null_residual_forward", fwd);
      man.scalar("null_residual_adjoint", adj);
      man.scalar("beam_midpoint", mid);
      man.timing("nullspace", tm.lap());
      man.write(out_path(cfg, "manifest_nullspace.json"));
      std::cout << "null residuals: forward " << fmt17(fwd) << ", adjoint " << fmt17(adj)
                << ", beam midpoint " << fmt17(mid) << "\n";
    } else if (*c_spectrum) {
      for_levels(cfg, refine, [&](const RunConfig& c, const std::string& sfx) {
        Timer tm;
        const OperatorPair pair = build_pair(c);
        ManifestBuilder man(c);
        man.timing("assemble" + sfx, tm.lap());
        EigenReport er;
        if (*sre || *sim) {
          er = eigs_near(pair, cplx(shift_re, shift_im), eig_count);
        } else {
          const AbscissaReport rep = spectral_abscissa_complement_report(pair, eig_count);
          er.eigenvalues = rep.eigenvalues;
          er.residuals.assign(rep.eigenvalues.size(), 0.0);
          man.scalar("abscissa" + sfx, rep.abscissa);
          man.scalar("abscissa_ok" + sfx, rep.ok);
          std::cout << "spectral abscissa" << sfx << " = " << fmt17(rep.abscissa) << "\n";
        }
        const std::string ep = out_path(c, "eigenvalues" + sfx + ".csv");
        write_text(ep, eigen_csv(er));
        man.file(ep);
        man.timing("spectrum" + sfx, tm.lap());
        man.write(out_path(c, "manifest_spectrum" + sfx + ".json"));
      });
    } else if (*c_sweep) {
      for_levels(cfg, refine, [&](const RunConfig& c, const std::string& sfx) {
        Timer tm;
        const OperatorPair pair = build_pair(c);
        ManifestBuilder man(c);
        man.timing("assemble" + sfx, tm.lap());
        SweepResult sw = resolvent_sweep(pair, c.beta_max, c.n_samples, 1e-4, c.seed);
        SweepResult full = sw;
        full.samples = sw.mirrored();
        const std::string cp = out_path(c, "sweep" + sfx + ".csv");
        write_text(cp, sweep_csv(full));
        man.file(cp);
        nlohmann::json summary = {{"sup_estimate", sw.sup_estimate},
                                  {"sup_beta", sw.sup_beta},
                                  {"all_converged", sw.all_converged}};
        const std::string jp = out_path(c, "sweep_summary" + sfx + ".json");
        write_text(jp, summary.dump(1));
        man.file(jp);
        man.scalar("sup_estimate" + sfx, sw.sup_estimate);
        man.scalar("sup_beta" + sfx, sw.sup_beta);
        if (plot) {
          const std::string pp = out_path(c, "sweep" + sfx + ".svg");
          emit_plot(cp, "sweep", pp);
          man.file(pp);
        }
        man.timing("sweep" + sfx, tm.lap());
        man.write(out_path(c, "manifest_sweep" + sfx + ".json"));
        std::cout << "sweep" << sfx << ": sup = " << fmt17(sw.sup_estimate) << " at beta = "
                  << fmt17(sw.sup_beta) << "\n";
      });
    } else if (*c_sim) {
      if (*topt) cfg.T = T_flag;
      if (*dtopt) cfg.dt = dt_flag;
      for_levels(cfg, refine, [&](const RunConfig& c, const std::string& sfx) {
        Timer tm;
        const OperatorPair pair = build_pair(c);
        ManifestBuilder man(c);
        man.timing("assemble" + sfx, tm.lap());
        double T = c.T;
        if (T <= 0.0) {
          T = std::min(200.0, 12.0 / std::abs(spectral_abscissa_complement(pair, 8)));
          man.timing("abscissa" + sfx, tm.lap());
        }
        const StateVector v = acceptance::complement_sample(pair, c.seed);
        const TrajectoryRecord rec = simulate(pair, v, T, c.dt);
        const DecayFit fit = fit_decay(rec);
        const std::string cp = out_path(c, "trajectory" + sfx + ".csv");
        write_text(cp, trajectory_csv(rec));
        man.file(cp);
        man.scalar("seed" + sfx, c.seed);
        man.scalar("horizon" + sfx, T);
        man.scalar("decay_delta" + sfx, fit.delta);
        man.scalar("decay_amplitude" + sfx, fit.M);
        man.scalar("decay_r_squared" + sfx, fit.r_squared);
        if (plot) {
          const std::string pp = out_path(c, "trajectory" + sfx + ".svg");
          emit_plot(cp, "energy", pp);
          man.file(pp);
        }
        man.timing("simulate" + sfx, tm.lap());
        man.write(out_path(c, "manifest_simulate" + sfx + ".json"));
        std::cout << "simulate" << sfx << ": delta = " << fmt17(fit.delta)
                  << ", r^2 = " << fmt17(fit.r_squared) << "\n";
      });
    } else if (*c_verify) {
      if (criteria.empty())
        for (int i = 1; i <= 12; ++i) criteria.push_back(i);
      ManifestBuilder man(cfg);
      bool all_pass = true;
      Timer tm;
      for (int id : criteria) {
        const auto r = acceptance::run_criterion(id);
        std::cout << acceptance::format_result(r) << "\n" << std::flush;
        man.scalar("criterion_" + std::to_string(id),
                   nlohmann::json{{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        man.timing("criterion_" + std::to_string(id), tm.lap());
        all_pass = all_pass && r.pass;
      }
      man.write(out_path(cfg, "manifest_verify.json"));
      return all_pass ? 0 : 1;
    } else if (*c_stokes) {
      ManifestBuilder man(cfg);
      Timer tm;
      std::vector<std::vector<double>> rows;
      std::vector<double> lh, le;
      const int levels = refine > 1 ? refine : 4;
      int n = 8;
      for (int l = 0; l < levels; ++l, n *= 2) {
        GeometryConfig geo;
        geo.nx = n;
        geo.ny = n;
        const Grid g = build_grid(geo);
        const StokesSolution sol = stokes_solve(
            [&](double x, double y) {
              return acceptance::mms_forcing(x, y, cfg.physics.eta, cfg.physics.nu);
            },
            nullptr, nullptr, g, cfg.physics);
        const QuadRule q = gauss_rule(4);
        double err2 = 0.0;
        for (int cell = 0; cell < g.n_cells; ++cell) {
          const auto nodes = g.cell_nodes(cell);
          const double x0 = g.node_x(nodes[0]), y0 = g.node_y(nodes[0]);
          for (std::size_t gi = 0; gi < q.xi.size(); ++gi)
            for (std::size_t gj = 0; gj < q.xi.size(); ++gj) {
              const Q1Basis b = q1_basis(q.xi[gi], q.xi[gj]);
              cplx u1 = 0.0, u2 = 0.0;
              for (int m = 0; m < 4; ++m) {
                u1 += sol.u[2 * nodes[m]] * b.val[m];
                u2 += sol.u[2 * nodes[m] + 1] * b.val[m];
              }
              const Eigen::Vector2d ue =
                  acceptance::mms_velocity(x0 + g.hx * q.xi[gi], y0 + g.hy * q.xi[gj]);
              err2 += q.w[gi] * q.w[gj] * g.hx * g.hy *
                      (std::norm(u1 - ue.x()) + std::norm(u2 - ue.y()));
            }
        }
        const double err = std::sqrt(err2);
        rows.push_back({1.0 / n, err, sol.mom_residual, sol.div_residual});
        lh.push_back(std::log(1.0 / n));
        le.push_back(std::log(err));
        std::cout << "h = 1/" << n << ": L2 velocity error = " << fmt17(err) << "\n";
      }
      const std::string cp = out_path(cfg, "stokes_convergence.csv");
      write_text(cp, table_csv({"h", "l2_velocity_error", "momentum_residual",
                                "divergence_residual"},
                               rows));
      man.file(cp);
      double order = 0.0;
      if (rows.size() >= 2) {
        order = acceptance::least_squares_slope(lh, le);
        man.scalar("l2_velocity_order", order);
        std::cout << "observed order = " << fmt17(order) << "\n";
      }
      man.timing("stokes_check", tm.lap());
      man.write(out_path(cfg, "manifest_stokes_check.json"));
      if (rows.size() >= 2 && order < 1.8) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
