#include "dtrkit/pipeline.hpp"

#include "dtrkit/csv.hpp"
#include "dtrkit/detrend.hpp"
#include "dtrkit/error.hpp"
#include "dtrkit/gridorder.hpp"
#include "dtrkit/manifest.hpp"
#include "dtrkit/parallel.hpp"
#include "dtrkit/svg.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>

namespace dtrkit {

namespace {

namespace fs = std::filesystem;

class Stage {
 public:
  Stage(Manifest& m, std::string name, std::vector<fs::path> inputs, std::string config)
      : manifest_(m), name_(std::move(name)), inputs_(std::move(inputs)), config_(std::move(config)) {
    fs::create_directories(manifest_.root() / dir());
    spdlog::info("stage {}", name_);
  }
  ~Stage() noexcept(false) {
    if (std::uncaught_exceptions() == 0) manifest_.record(name_, inputs_, config_, outputs_);
  }

  std::ofstream open(const std::string& file) {
    outputs_.push_back(manifest_.root() / dir() / file);
    std::ofstream os(outputs_.back(), std::ios::binary);
    if (!os) throw DataError("cannot write " + outputs_.back().string());
    return os;
  }

 private:
  std::string dir() const { return name_; }

  Manifest& manifest_;
  std::string name_;
  std::vector<fs::path> inputs_;
  std::string config_;
  std::vector<fs::path> outputs_;
};

SpectralSummary full_spectrum(const Eigen::MatrixXd& R, Eigen::Index n) {
  const auto eig = sym_eigen(R);
  return summarize_spectrum(eig.values, n, R.rows());
}

void spectrum_outputs(Stage& st, const std::string& tag, const Eigen::MatrixXd& R, Eigen::Index n) {
  const auto s = full_spectrum(R, n);
  {
    auto eigs = st.open("spectrum_" + tag + ".csv");
    auto edges = st.open("mp_" + tag + ".csv");
    write_spectrum(eigs, edges, s);
  }
  const auto clean = denoise(R, s.significant);
  auto os = st.open("heatmap_" + tag + ".svg");
  svg::write_heatmap(os, "R^" + tag + ": upper original, lower MP de-noised",
                     svg::compose_triangles(R, clean.matrix));
}

}  // namespace

void run_report(const RunConfig& cfg) {
  cfg.validate(true);
  thread_count() = cfg.threads;
  const fs::path root = cfg.out;
  fs::create_directories(root);
  Manifest manifest(root);
  const std::string conf = cfg.to_text();
  std::vector<fs::path> inputs{cfg.grids_path, cfg.values_path};
  if (!cfg.enso_path.empty()) inputs.emplace_back(cfg.enso_path);

  {
    std::ofstream os(root / "config.txt", std::ios::binary);
    os << conf;
  }

  const auto loaded = load_panel(cfg);
  const Panel& D = loaded.panel;
  spdlog::info("panel: {} days x {} grids ({} dropped)", D.n_days(), D.n_grids(), loaded.dropped.size());
  {
    Stage st(manifest, "ingest", inputs, conf);
    auto os = st.open("summary.csv");
    os << "quantity,value\nn_days," << D.n_days() << "\nn_grids," << D.n_grids() << "\ndropped,"
       << loaded.dropped.size() << '\n';
    auto dr = st.open("dropped.csv");
    dr << "grid_id\n";
    for (const auto& id : loaded.dropped) dr << id << '\n';
  }
  {
    Stage st(manifest, "order", inputs, conf);
    auto os = st.open("ordering.csv");
    os << "position,grid_id\n";
    for (std::size_t k = 0; k < D.grids.size(); ++k) os << k + 1 << ',' << D.grids[k].grid_id << '\n';
  }

  const auto f = svd(D.values);
  {
    Stage st(manifest, "svd", inputs, conf);
    auto os = st.open("singular_values.csv");
    os << "index,sigma,cumulative_share\n";
    for (Eigen::Index i = 0; i < f.sigma.size(); ++i)
      os << i + 1 << ',' << csv::format_double(f.sigma(i)) << ',' << csv::format_double(cumulative_share(f, i + 1))
         << '\n';
  }

  const Eigen::Index k = std::min(cfg.trim_k, f.sigma.size());
  const auto trimmed = trim_svd(D, f, k, std::min(cfg.max_lag, D.n_days() - 1));
  const Panel& S = trimmed.trimmed;
  {
    Stage st(manifest, "trim", inputs, conf);
    auto shares = st.open("shares.csv");
    auto acfs = st.open("acf.csv");
    write_trim_report(shares, acfs, trimmed.report, f.sigma, S.grid_ids());
    auto sw = st.open("sweep.csv");
    sw << "k,cumulative_share,fraction_within_band\n";
    for (const auto& r : trim_sweep(D, std::min<Eigen::Index>(2 * k, f.sigma.size()), std::max<Eigen::Index>(1, std::min(cfg.max_lag, D.n_days() - 1))))
      sw << r.k << ',' << csv::format_double(r.cumulative_share) << ',' << csv::format_double(r.fraction_within_band)
         << '\n';
    if (cfg.export_panels) {
      auto os = st.open("S_values.csv");
      write_panel_values(os, S);
    }
  }

  const Panel T = build_T(D, cfg.period);
  {
    Stage st(manifest, "decompose", inputs, conf);
    auto os = st.open("summary.csv");
    os << "quantity,value\nperiod," << cfg.period << "\nrows," << T.n_days() << "\nfirst_date," << T.calendar.iso(0)
       << "\nlast_date," << T.calendar.iso(T.calendar.n_days() - 1) << '\n';
    if (cfg.export_panels) {
      auto tv = st.open("T_values.csv");
      write_panel_values(tv, T);
    }
  }

  const Eigen::MatrixXd RD = pearson_corr(D.values);
  {
    Stage st(manifest, "mp", inputs, conf);
    spectrum_outputs(st, "D", RD, D.n_days());
    spectrum_outputs(st, "S", pearson_corr(S.values), S.n_days());
    spectrum_outputs(st, "T", pearson_corr(T.values), T.n_days());
  }

  const auto esd_D = run_yearly_esd(D);
  const auto esd_S = run_yearly_esd(S);
  {
    Stage st(manifest, "esd", inputs, conf);
    for (const auto& [tag, series] : {std::pair{"D", &esd_D}, std::pair{"S", &esd_S}}) {
      auto os = st.open(std::string("yearly_") + tag + ".csv");
      write_yearly_esd(os, *series);
      auto pl = st.open(std::string("yearly_") + tag + ".svg");
      plot_yearly_esd(pl, std::string("Yearly eigenvalues of R^") + tag, *series);
    }
  }

  {
    Stage st(manifest, "gsvd", inputs, conf);
    GsvdSweepOptions go;
    go.null_reps = cfg.null_reps;
    go.seed = cfg.seed;
    go.level = cfg.level;
    const auto run = [&](const std::string& tag, const Panel& P, SweepMode mode) {
      const auto sweep = run_gsvd_sweep(P, mode, go);
      const std::string stem = std::string(to_string(mode)) + "_" + tag;
      auto v = st.open(stem + "_values.csv");
      auto s = st.open(stem + "_summary.csv");
      write_gsvd_sweep(v, s, sweep);
      if (std::none_of(sweep.pairs.begin(), sweep.pairs.end(), [](const GsvdPair& p) { return p.ok(); })) {
        spdlog::warn("{} sweep on {}: no block could be decomposed ({})", to_string(mode), tag,
                     sweep.pairs.empty() ? "no blocks" : sweep.pairs.front().error);
        return;
      }
      auto pl = st.open(stem + ".svg");
      plot_gsvd_sweep(pl, "log gsv, " + std::string(to_string(mode)) + ", " + tag, sweep);
    };
    if (D.calendar.years().size() >= 2) {
      run("D", D, SweepMode::YearPairs);
      run("S", S, SweepMode::YearPairs);
    }
    run("D", D, SweepMode::TransposedHalfYears);
  }

  {
    Stage st(manifest, "null-sv", inputs, conf);
    Eigen::MatrixXd Z = S.values;
    standardize_columns(Z);
    const Eigen::VectorXd sigma = svd(Z).sigma;
    const auto null = simulate_sv_null(Z.rows(), Z.cols(), cfg.null_reps, cfg.seed, cfg.level, true);
    auto cv = st.open("critical_values.csv");
    write_critical_values(cv, null);
    auto os = st.open("trimmed_vs_null.csv");
    os << "index,sigma,outside\n";
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      os << i + 1 << ',' << csv::format_double(sigma(i)) << ','
         << (sigma(i) < null.lower || sigma(i) > null.upper ? 1 : 0) << '\n';
  }

  const auto W = make_weights(D.grids, cfg);
  BergsmaOptions bo;
  bo.estimator = cfg.estimator;
  const auto sb_year = sb_series(D, W, SbSliceBy::Year, bo);
  {
    Stage st(manifest, "sb", inputs, conf);
    auto y = st.open("by_year.csv");
    write_sb_series(y, sb_year);
    auto m = st.open("by_month.csv");
    write_sb_series(m, sb_series(D, W, SbSliceBy::YearMonth, bo));
    auto z = st.open("by_zone.csv");
    write_sb_series(z, sb_series(D, W, SbSliceBy::YearZone, bo));
    std::vector<std::string> labels;
    svg::LineSeries line{"S_B", {}};
    for (const auto& r : sb_year) {
      labels.push_back(r.slice);
      line.y.push_back(r.ok() ? r.value : std::numeric_limits<double>::quiet_NaN());
    }
    auto pl = st.open("by_year.svg");
    svg::write_line(pl, "Spatial Bergsma by year", labels, {line});
    const auto first = slice(D, Selector::of_year(D.calendar[0].year));
    const auto B = bergsma_corr_matrix(first, bo);
    auto hm = st.open("bergsma_first_year.svg");
    svg::write_heatmap(hm, "First year: upper Pearson, lower Bergsma",
                       svg::compose_triangles(pearson_corr(first.values), B.values));
  }

  {
    Stage st(manifest, "changepoint", inputs, conf);
    const auto write = [&](const std::string& file, const std::vector<ChangeSplit>& rows) {
      auto os = st.open(file);
      write_change_summary(os, rows);
    };
    if (esd_D.years.size() >= 8) {
      write("esd_D.csv", run_change_summary(esd_D));
      write("esd_S.csv", run_change_summary(esd_S));
    }
    if (sb_year.size() >= 8) write("sb.csv", run_change_summary(sb_year));
    auto note = st.open("README.txt");
    note << "Least-squares single-split summaries of yearly tracks. Descriptive only; no significance is implied.\n"
         << "Tracks with fewer than 8 years are not summarized.\n";
  }

  if (!cfg.enso_path.empty()) {
    Stage st(manifest, "enso", inputs, conf);
    const auto years = D.calendar.years();
    const auto table = load_enso(cfg.enso_path, years.front(), years.back());
    const auto groups = run_enso_stratification(sb_year, table);
    auto os = st.open("summary.csv");
    write_enso_summary(os, groups);
    auto pl = st.open("summary.svg");
    plot_enso_summary(pl, "Spatial Bergsma by ENSO phase", groups);
  }

  {
    Stage st(manifest, "strata", inputs, conf);
    const auto strata = run_singular_vector_strata(f, D.calendar);
    auto m = st.open("by_month.csv");
    write_strata(m, strata.by_month);
    auto y = st.open("by_year_daytype.csv");
    write_strata(y, strata.by_year_daytype);
    auto pm = st.open("u1_by_month.svg");
    plot_strata(pm, "First left singular vector by month", strata.by_month, 1);
    auto py = st.open("u1_by_year_daytype.svg");
    plot_strata(py, "First left singular vector by year and day type", strata.by_year_daytype, 1);
  }

  {
    Stage st(manifest, "neighbors", inputs, conf);
    const auto t = max_corr_neighbor(RD, D.grids);
    auto os = st.open("max_corr.csv");
    write_max_corr(os, t);
    auto hl = st.open("dlat.svg");
    svg::write_histogram(hl, "Latitude offset of the most correlated neighbour", t.dlat_hist);
    auto hn = st.open("dlon.svg");
    svg::write_histogram(hn, "Longitude offset of the most correlated neighbour", t.dlon_hist);
  }

  manifest.write();
  spdlog::info("report written to {}", root.string());
}

}  // namespace dtrkit
