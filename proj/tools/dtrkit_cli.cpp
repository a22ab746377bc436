#include "dtrkit/association.hpp"
#include "dtrkit/config.hpp"
#include "dtrkit/csv.hpp"
#include "dtrkit/detrend.hpp"
#include "dtrkit/error.hpp"
#include "dtrkit/gridorder.hpp"
#include "dtrkit/parallel.hpp"
#include "dtrkit/pipeline.hpp"
#include "dtrkit/rmt.hpp"
#include "dtrkit/svg.hpp"
#include "dtrkit/synth.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace dtrkit;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<std::string> log_level;
  std::optional<std::string> grids, values, enso, start, end;
  std::vector<std::string> settings;  // key=value
};

RunConfig make_config(const Globals& g, bool require_inputs) {
  std::map<std::string, std::string> kv;
  for (const auto& s : g.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  if (g.out) kv["out"] = *g.out;
  if (g.threads) kv["threads"] = std::to_string(*g.threads);
  if (g.log_level) kv["log_level"] = *g.log_level;
  if (g.grids) kv["grids"] = *g.grids;
  if (g.values) kv["values"] = *g.values;
  if (g.enso) kv["enso"] = *g.enso;
  if (g.start) kv["start"] = *g.start;
  if (g.end) kv["end"] = *g.end;
  auto cfg = load_config(g.config, kv);
  cfg.validate(require_inputs);
  spdlog::set_level(spdlog::level::from_str(cfg.log_level));
  thread_count() = cfg.threads;
  return cfg;
}

fs::path stage_dir(const RunConfig& cfg, const std::string& name) {
  const auto dir = fs::path(cfg.out) / name;
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  spdlog::debug("writing {}", path.string());
  return os;
}

Panel choose_panel(const RunConfig& cfg, const std::string& which) {
  auto D = load_panel(cfg).panel;
  if (which == "D") return D;
  if (which == "S") return trim_svd(D, cfg.trim_k).trimmed;
  if (which == "T") return build_T(D, cfg.period);
  throw UsageError("panel must be D, S or T");
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("dtrkit"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Spatio-temporal analysis of gridded daily series"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");
  app.add_option("--grids", g.grids, "grid metadata CSV");
  app.add_option("--values", g.values, "daily values CSV");
  app.add_option("--enso", g.enso, "ENSO phase CSV");
  app.add_option("--start", g.start, "first day, YYYY-MM-DD");
  app.add_option("--end", g.end, "last day, YYYY-MM-DD");
  app.add_option("--set", g.settings, "override any config key, key=value");

  std::function<void()> action;

  auto* ingest = app.add_subcommand("ingest", "validate inputs and select complete grids");
  ingest->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto lp = load_panel(cfg);
      const auto dir = stage_dir(cfg, "ingest");
      auto os = open_out(dir / "summary.csv");
      os << "quantity,value\nn_days," << lp.panel.n_days() << "\nn_grids," << lp.panel.n_grids() << "\ndropped,"
         << lp.dropped.size() << '\n';
      auto dr = open_out(dir / "dropped.csv");
      dr << "grid_id\n";
      for (const auto& id : lp.dropped) dr << id << '\n';
      std::cout << lp.panel.n_days() << " days, " << lp.panel.n_grids() << " complete grids, " << lp.dropped.size()
                << " dropped\n";
    };
  });

  std::string order_tag;
  auto* order = app.add_subcommand("order", "write a grid ordering");
  order->add_option("--tag", order_tag, "raster|raster-lon|spiral|spiral-down|zone|zone-then-spiral|input");
  order->callback([&] {
    action = [&] {
      auto cfg = make_config(g, false);
      if (cfg.grids_path.empty()) throw UsageError("order needs --grids");
      const auto grids = load_grid_metadata(cfg.grids_path);
      validate_grids(grids);
      const auto o = order_by_tag(grids, order_tag.empty() ? cfg.order : order_tag);
      auto os = open_out(stage_dir(cfg, "order") / "ordering.csv");
      write_ordering(os, o, grids);
    };
  });

  auto* svd_cmd = app.add_subcommand("svd", "singular values of the panel");
  svd_cmd->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto f = svd(load_panel(cfg).panel.values);
      auto os = open_out(stage_dir(cfg, "svd") / "singular_values.csv");
      os << "index,sigma,cumulative_share\n";
      for (Eigen::Index i = 0; i < f.sigma.size(); ++i)
        os << i + 1 << ',' << csv::format_double(f.sigma(i)) << ','
           << csv::format_double(cumulative_share(f, i + 1)) << '\n';
    };
  });

  Eigen::Index sweep_max = 0;
  bool export_trim = false;
  auto* trim = app.add_subcommand("trim", "remove the top-k singular components");
  trim->add_option("--sweep", sweep_max, "also report k = 1..K");
  trim->add_flag("--export", export_trim, "write the trimmed panel");
  trim->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto D = load_panel(cfg).panel;
      const auto r = trim_svd(D, cfg.trim_k, cfg.max_lag);
      const auto dir = stage_dir(cfg, "trim");
      auto shares = open_out(dir / "shares.csv");
      auto acfs = open_out(dir / "acf.csv");
      write_trim_report(shares, acfs, r.report, r.factors.sigma, r.trimmed.grid_ids());
      if (sweep_max > 0) {
        auto sw = open_out(dir / "sweep.csv");
        sw << "k,cumulative_share,fraction_within_band\n";
        for (const auto& row : trim_sweep(D, sweep_max, std::max<Eigen::Index>(1, cfg.max_lag)))
          sw << row.k << ',' << csv::format_double(row.cumulative_share) << ','
             << csv::format_double(row.fraction_within_band) << '\n';
      }
      if (export_trim || cfg.export_panels) {
        auto os = open_out(dir / "S_values.csv");
        write_panel_values(os, r.trimmed);
      }
      std::cout << "cumulative share at k=" << cfg.trim_k << ": " << r.report.cumulative_share << '\n';
    };
  });

  auto* decompose = app.add_subcommand("decompose", "classical seasonal decomposition residuals");
  decompose->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto T = build_T(load_panel(cfg).panel, cfg.period);
      auto os = open_out(stage_dir(cfg, "decompose") / "T_values.csv");
      write_panel_values(os, T);
    };
  });

  std::string esd_panel = "D";
  bool esd_yearly = false;
  auto* esd = app.add_subcommand("esd", "eigenvalue spectrum of a correlation matrix");
  esd->add_option("--panel", esd_panel, "D, S or T");
  esd->add_flag("--yearly", esd_yearly, "one spectrum per calendar year");
  esd->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto P = choose_panel(cfg, esd_panel);
      const auto dir = stage_dir(cfg, "esd");
      if (esd_yearly) {
        const auto series = run_yearly_esd(P);
        auto os = open_out(dir / ("yearly_" + esd_panel + ".csv"));
        write_yearly_esd(os, series);
        auto pl = open_out(dir / ("yearly_" + esd_panel + ".svg"));
        plot_yearly_esd(pl, "Yearly eigenvalues of R^" + esd_panel, series);
      } else {
        const auto R = pearson_corr(P);
        const auto s = summarize_spectrum(sym_eigen(R.values).values, P.n_days(), P.n_grids());
        auto eigs = open_out(dir / ("spectrum_" + esd_panel + ".csv"));
        auto edges = open_out(dir / ("mp_" + esd_panel + ".csv"));
        write_spectrum(eigs, edges, s);
        auto hm = open_out(dir / ("heatmap_" + esd_panel + ".svg"));
        svg::write_heatmap(hm, "R^" + esd_panel + ": upper original, lower MP de-noised",
                           svg::compose_triangles(R.values, denoise(R.values, s.significant).matrix));
        std::cout << s.significant_count << " significant eigenvalues\n";
      }
    };
  });

  double mp_y = 0.0;
  Eigen::Index mp_n = 0, mp_p = 0;
  int mp_points = 0;
  auto* mp = app.add_subcommand("mp", "Marchenko-Pastur support edges and density");
  mp->add_option("--y", mp_y, "aspect ratio p/n");
  mp->add_option("--n", mp_n, "rows");
  mp->add_option("--p", mp_p, "columns");
  mp->add_option("--density", mp_points, "also tabulate the density at this many points");
  mp->callback([&] {
    action = [&] {
      double y = mp_y;
      if (y <= 0.0) {
        if (mp_n <= 0 || mp_p <= 0) throw UsageError("mp needs --y or both --n and --p");
        y = static_cast<double>(mp_p) / static_cast<double>(mp_n);
      }
      const auto s = mp_support(y);
      std::cout << "y," << csv::format_double(y) << "\nlower," << csv::format_double(s.lower) << "\nupper,"
                << csv::format_double(s.upper) << '\n';
      if (mp_points > 1) {
        const auto cfg = make_config(g, false);
        auto os = open_out(stage_dir(cfg, "mp") / "density.csv");
        os << "x,density,density_raw\n";
        for (int i = 0; i < mp_points; ++i) {
          const double x = s.lower + (s.upper - s.lower) * i / (mp_points - 1);
          os << csv::format_double(x) << ',' << csv::format_double(mp_density(x, y)) << ','
             << csv::format_double(mp_density_raw(x, y)) << '\n';
        }
      }
    };
  });

  std::string sweep_mode = "year-pairs", gsvd_panel = "D";
  auto* gsvd_cmd = app.add_subcommand("gsvd", "generalized singular values of year blocks");
  gsvd_cmd->add_option("--mode", sweep_mode, "year-pairs or transposed-half-years");
  gsvd_cmd->add_option("--panel", gsvd_panel, "D, S or T");
  gsvd_cmd->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      GsvdSweepOptions opts;
      opts.null_reps = cfg.null_reps;
      opts.seed = cfg.seed;
      opts.level = cfg.level;
      const auto mode = parse_sweep_mode(sweep_mode);
      const auto sweep = run_gsvd_sweep(choose_panel(cfg, gsvd_panel), mode, opts);
      const auto dir = stage_dir(cfg, "gsvd");
      const std::string stem = sweep_mode + "_" + gsvd_panel;
      auto v = open_out(dir / (stem + "_values.csv"));
      auto s = open_out(dir / (stem + "_summary.csv"));
      write_gsvd_sweep(v, s, sweep);
      auto pl = open_out(dir / (stem + ".svg"));
      plot_gsvd_sweep(pl, "log gsv, " + sweep_mode + ", " + gsvd_panel, sweep);
    };
  });

  Eigen::Index null_n = 0, null_p = 0;
  auto* null_sv = app.add_subcommand("null-sv", "simulated singular-value null");
  null_sv->add_option("--n", null_n, "rows")->required();
  null_sv->add_option("--p", null_p, "columns")->required();
  null_sv->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, false);
      const auto null = simulate_sv_null(null_n, null_p, cfg.null_reps, cfg.seed, cfg.level);
      const auto dir = stage_dir(cfg, "null-sv");
      auto t = open_out(dir / "table.csv");
      write_null_table(t, null);
      auto c = open_out(dir / "critical_values.csv");
      write_critical_values(c, null);
    };
  });

  Eigen::Index n1 = 0, n2 = 0, gp = 0;
  std::vector<int> permute_years;
  auto* null_gsv = app.add_subcommand("null-gsv", "simulated or permutation generalized singular-value null");
  null_gsv->add_option("--n1", n1, "rows of the first matrix");
  null_gsv->add_option("--n2", n2, "rows of the second matrix");
  null_gsv->add_option("--p", gp, "shared columns");
  null_gsv->add_option("--permute", permute_years, "two panel years to permute instead of simulating")
      ->expected(2);
  null_gsv->callback([&] {
    action = [&] {
      EmpiricalNull null;
      RunConfig cfg;
      if (!permute_years.empty()) {
        cfg = make_config(g, true);
        const auto D = load_panel(cfg).panel;
        const auto A = slice(D, Selector::of_year(permute_years[0])).values;
        const auto B = slice(D, Selector::of_year(permute_years[1])).values;
        null = permutation_gsv_null(A, B, cfg.null_reps, cfg.seed, cfg.level, cfg.permutation);
      } else {
        if (n1 <= 0 || n2 <= 0 || gp <= 0) throw UsageError("null-gsv needs --n1, --n2 and --p, or --permute");
        cfg = make_config(g, false);
        null = simulate_gsv_null(n1, n2, gp, cfg.null_reps, cfg.seed, cfg.level);
      }
      const auto dir = stage_dir(cfg, "null-gsv");
      auto t = open_out(dir / "table.csv");
      write_null_table(t, null);
      auto c = open_out(dir / "critical_values.csv");
      write_critical_values(c, null);
    };
  });

  int bergsma_year = 0;
  auto* bergsma = app.add_subcommand("bergsma", "Bergsma correlation matrix of one year");
  bergsma->add_option("--year", bergsma_year, "calendar year")->required();
  bergsma->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto P = slice(load_panel(cfg).panel, Selector::of_year(bergsma_year));
      BergsmaOptions bo;
      bo.estimator = cfg.estimator;
      const auto B = bergsma_corr_matrix(P, bo);
      const auto dir = stage_dir(cfg, "bergsma");
      auto os = open_out(dir / ("matrix_" + std::to_string(bergsma_year) + ".csv"));
      csv::write_labeled_matrix(os, B.values, B.grid_ids);
      auto hm = open_out(dir / ("matrix_" + std::to_string(bergsma_year) + ".svg"));
      svg::write_heatmap(hm, "Upper Pearson, lower Bergsma",
                         svg::compose_triangles(pearson_corr(P.values), B.values));
      if (!B.failed.empty()) spdlog::warn("{} pairs could not be evaluated", B.failed.size());
    };
  });

  std::string sb_by = "year";
  auto* sb = app.add_subcommand("sb", "spatial Bergsma series");
  sb->add_option("--by", sb_by, "year, month or zone");
  auto slice_by = [](const std::string& s) {
    if (s == "year") return SbSliceBy::Year;
    if (s == "month") return SbSliceBy::YearMonth;
    if (s == "zone") return SbSliceBy::YearZone;
    throw UsageError("--by must be year, month or zone");
  };
  sb->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto D = load_panel(cfg).panel;
      BergsmaOptions bo;
      bo.estimator = cfg.estimator;
      const auto series = sb_series(D, make_weights(D.grids, cfg), slice_by(sb_by), bo);
      auto os = open_out(stage_dir(cfg, "sb") / ("by_" + sb_by + ".csv"));
      write_sb_series(os, series);
    };
  });

  auto* enso = app.add_subcommand("enso", "spatial Bergsma by ENSO phase");
  enso->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      if (cfg.enso_path.empty()) throw UsageError("enso needs an ENSO table (--enso)");
      const auto D = load_panel(cfg).panel;
      BergsmaOptions bo;
      bo.estimator = cfg.estimator;
      const auto series = sb_series(D, make_weights(D.grids, cfg), SbSliceBy::Year, bo);
      const auto years = D.calendar.years();
      const auto groups = run_enso_stratification(series, load_enso(cfg.enso_path, years.front(), years.back()));
      const auto dir = stage_dir(cfg, "enso");
      auto os = open_out(dir / "summary.csv");
      write_enso_summary(os, groups);
      auto pl = open_out(dir / "summary.svg");
      plot_enso_summary(pl, "Spatial Bergsma by ENSO phase", groups);
    };
  });

  auto* strata = app.add_subcommand("strata", "left singular vectors by month and day type");
  strata->callback([&] {
    action = [&] {
      const auto cfg = make_config(g, true);
      const auto D = load_panel(cfg).panel;
      const auto s = run_singular_vector_strata(svd(D.values), D.calendar);
      const auto dir = stage_dir(cfg, "strata");
      auto m = open_out(dir / "by_month.csv");
      write_strata(m, s.by_month);
      auto y = open_out(dir / "by_year_daytype.csv");
      write_strata(y, s.by_year_daytype);
      auto pm = open_out(dir / "u1_by_month.svg");
      plot_strata(pm, "First left singular vector by month", s.by_month, 1);
    };
  });

  std::string cp_file, cp_column, cp_track;
  auto* changepoint = app.add_subcommand("changepoint", "single-split change summary of a series");
  changepoint->add_option("--file", cp_file, "CSV whose first column labels the points");
  changepoint->add_option("--column", cp_column, "value column of --file");
  changepoint->add_option("--track", cp_track, "esd-D, esd-S or sb, computed from the panel");
  changepoint->callback([&] {
    action = [&] {
      std::vector<ChangeSplit> rows;
      RunConfig cfg;
      if (!cp_file.empty()) {
        cfg = make_config(g, false);
        if (cp_column.empty()) throw UsageError("--file needs --column");
        std::ifstream in(cp_file);
        if (!in) throw DataError("cannot open " + cp_file);
        std::string line;
        std::getline(in, line);
        const auto header = csv::split(line);
        const auto col = std::find(header.begin(), header.end(), cp_column) - header.begin();
        if (col == static_cast<long>(header.size())) throw DataError(cp_file + ": no column " + cp_column);
        std::vector<double> values;
        std::vector<std::string> labels;
        while (std::getline(in, line)) {
          if (csv::trim(line).empty()) continue;
          const auto f = csv::split(line);
          if (f.size() != header.size()) throw DataError(cp_file + ": wrong field count");
          labels.push_back(f[0]);
          values.push_back(f[static_cast<std::size_t>(col)].empty() || f[static_cast<std::size_t>(col)] == "NA"
                               ? std::numeric_limits<double>::quiet_NaN()
                               : csv::parse_double(f[static_cast<std::size_t>(col)]));
        }
        rows.push_back(change_summary(cp_column, values, labels));
      } else if (cp_track == "esd-D" || cp_track == "esd-S") {
        cfg = make_config(g, true);
        rows = run_change_summary(run_yearly_esd(choose_panel(cfg, cp_track.substr(4))));
      } else if (cp_track == "sb") {
        cfg = make_config(g, true);
        const auto D = load_panel(cfg).panel;
        rows = run_change_summary(sb_series(D, make_weights(D.grids, cfg), SbSliceBy::Year));
      } else {
        throw UsageError("changepoint needs --file/--column or --track");
      }
      auto os = open_out(stage_dir(cfg, "changepoint") / "summary.csv");
      write_change_summary(os, rows);
      write_change_summary(std::cout, rows);
    };
  });

  auto* report = app.add_subcommand("report", "run every stage and write a manifest");
  report->callback([&] {
    action = [&] { run_report(make_config(g, true)); };
  });

  SynthSpec synth_spec;
  std::string synth_dir;
  int switch_year = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic input set");
  synth->add_option("--dir", synth_dir, "target directory")->required();
  synth->add_option("--rows", synth_spec.lattice_rows, "lattice rows");
  synth->add_option("--cols", synth_spec.lattice_cols, "lattice columns");
  synth->add_option("--first-year", synth_spec.first_year, "first year");
  synth->add_option("--years", synth_spec.n_years, "number of years");
  synth->add_option("--switch-year", switch_year, "year the common factor switches on");
  synth->callback([&] {
    action = [&] {
      if (g.seed) synth_spec.seed = *g.seed;
      if (switch_year != 0) synth_spec.switch_year = switch_year;
      write_synth(synthesize(synth_spec), synth_dir);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    action();
    return 0;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
}
