#include "dtrkit/pipeline.hpp"

#include "dtrkit/csv.hpp"
#include "dtrkit/error.hpp"
#include "dtrkit/gridorder.hpp"
#include "dtrkit/parallel.hpp"
#include "dtrkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <tuple>

namespace dtrkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::map<int, std::vector<std::size_t>> rows_by_year(const CalendarIndex& cal) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < cal.n_days(); ++i) out[cal[i].year].push_back(i);
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

struct Quartiles {
  double q1, median, q3;
};

Quartiles quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75)};
}

int slice_year(const std::string& label) {
  if (label.size() < 4) throw DataError("slice label '" + label + "' has no year");
  return static_cast<int>(csv::parse_int(label.substr(0, 4)));
}

}  // namespace

LoadedPanel load_panel(const RunConfig& cfg) {
  const auto grids = load_grid_metadata(cfg.grids_path);
  validate_grids(grids);
  const auto cal = build_calendar(cfg.start, cfg.end, cfg.december_with_next_year);
  auto sel = select_complete(load_daily_values(cfg.values_path, grids, cal));
  if (sel.empty()) throw DataError("no grid is complete over the study window");
  LoadedPanel out;
  out.panel = apply_order(sel.panel, order_by_tag(sel.panel.grids, cfg.order));
  out.dropped = std::move(sel.dropped);
  return out;
}

void write_panel_values(std::ostream& os, const Panel& panel) {
  os << "date,grid_id,value\n";
  for (Eigen::Index i = 0; i < panel.n_days(); ++i) {
    const auto date = panel.calendar.iso(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < panel.n_grids(); ++j)
      if (!std::isnan(panel.values(i, j)))
        os << date << ',' << panel.grids[static_cast<std::size_t>(j)].grid_id << ','
           << csv::format_double(panel.values(i, j)) << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<double> YearlySpectralSeries::track(const std::string& name) const {
  std::function<double(const SpectralSummary&)> get;
  if (name == "median") {
    get = [](const SpectralSummary& s) { return s.median(); };
  } else if (name == "top") {
    get = [](const SpectralSummary& s) { return s.eigenvalues(0); };
  } else if (name.size() == 3 && name[0] == 'q' && name[2] == '0' && name[1] >= '1' && name[1] <= '9') {
    const auto k = static_cast<std::size_t>(name[1] - '0');
    get = [k](const SpectralSummary& s) { return s.quantiles[k]; };
  } else {
    throw UsageError("unknown spectral track '" + name + "'");
  }
  std::vector<double> out;
  for (const auto& y : years) out.push_back(y.summary ? get(*y.summary) : kNaN);
  return out;
}

std::vector<std::string> YearlySpectralSeries::labels() const {
  std::vector<std::string> out;
  for (const auto& y : years) out.push_back(std::to_string(y.year));
  return out;
}

YearlySpectralSeries run_yearly_esd(const Panel& panel) {
  const auto groups = rows_by_year(panel.calendar);
  if (groups.empty()) throw DataError("yearly ESD: empty panel");
  YearlySpectralSeries series;
  std::vector<const std::vector<std::size_t>*> rows;
  for (const auto& [year, r] : groups) {
    series.years.push_back({year, std::nullopt, {}});
    rows.push_back(&r);
  }
  parallel_for(rows.size(), [&](std::size_t k) {
    auto& out = series.years[k];
    try {
      const Eigen::MatrixXd X = take_rows(panel.values, *rows[k]);
      const auto R = pearson_corr(X);
      const auto eig = sym_eigen(R);
      out.summary = summarize_spectrum(eig.values, X.rows(), X.cols());
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });
  return series;
}

void write_yearly_esd(std::ostream& os, const YearlySpectralSeries& series) {
  os << "year,n_obs,p_dim,significant,median,top";
  for (int q = 0; q <= 100; q += 10) os << ",q" << q;
  os << ",error\n";
  for (const auto& y : series.years) {
    os << y.year;
    if (y.summary) {
      const auto& s = *y.summary;
      os << ',' << s.n_obs << ',' << s.p_dim << ',' << s.significant_count << ',' << csv::format_double(s.median())
         << ',' << csv::format_double(s.eigenvalues(0));
      for (double q : s.quantiles) os << ',' << csv::format_double(q);
      os << ",\n";
    } else {
      os << ",,,,,";
      for (int q = 0; q <= 100; q += 10) os << ',';
      os << ',' << y.error << '\n';
    }
  }
}

void plot_yearly_esd(std::ostream& os, const std::string& title, const YearlySpectralSeries& series) {
  std::vector<svg::BoxGroup> groups;
  for (const auto& y : series.years) {
    svg::BoxGroup g{std::to_string(y.year), {}};
    if (y.summary) g.values.assign(y.summary->eigenvalues.data(), y.summary->eigenvalues.data() + y.summary->eigenvalues.size());
    groups.push_back(std::move(g));
  }
  svg::write_boxplot(os, title, groups);
}

// ---------------------------------------------------------------------------

std::string_view to_string(SweepMode m) { return m == SweepMode::YearPairs ? "year-pairs" : "transposed-half-years"; }

SweepMode parse_sweep_mode(std::string_view s) {
  if (s == "year-pairs") return SweepMode::YearPairs;
  if (s == "transposed-half-years") return SweepMode::TransposedHalfYears;
  throw UsageError("unknown sweep mode '" + std::string(s) + "'");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> half_year_rows(std::size_t first_row, std::size_t n_days) {
  if (n_days != 365 && n_days != 366) throw UsageError("half-year split needs a full year of days");
  const std::size_t half = n_days == 366 ? 183 : 182;
  const std::size_t second = 183;  // day 184; day 183 of a common year is dropped
  std::vector<std::size_t> a(half), b(half);
  for (std::size_t i = 0; i < half; ++i) {
    a[i] = first_row + i;
    b[i] = first_row + second + i;
  }
  return {a, b};
}

GsvdSweep run_gsvd_sweep(const Panel& panel, SweepMode mode, const GsvdSweepOptions& opts) {
  const auto groups = rows_by_year(panel.calendar);
  struct Job {
    std::vector<std::size_t> rows1, rows2;
    bool transpose = false;
  };
  GsvdSweep sweep;
  sweep.mode = mode;
  std::vector<Job> jobs;
  if (mode == SweepMode::YearPairs) {
    if (groups.size() < 2) throw UsageError("year-pair sweep needs at least two years");
    for (auto it = groups.begin(); std::next(it) != groups.end(); ++it) {
      const auto nx = std::next(it);
      GsvdPair p;
      p.label = std::to_string(it->first) + "-" + std::to_string(nx->first);
      sweep.pairs.push_back(std::move(p));
      jobs.push_back({it->second, nx->second, false});
    }
  } else {
    for (const auto& [year, rows] : groups) {
      GsvdPair p;
      p.label = std::to_string(year);
      Job job;
      job.transpose = true;
      try {
        auto [a, b] = half_year_rows(rows.front(), rows.size());
        job.rows1 = std::move(a);
        job.rows2 = std::move(b);
      } catch (const UsageError& e) {
        p.error = e.what();
      }
      sweep.pairs.push_back(std::move(p));
      jobs.push_back(std::move(job));
    }
  }

  parallel_for(jobs.size(), [&](std::size_t k) {
    auto& out = sweep.pairs[k];
    if (!out.ok()) return;
    try {
      Eigen::MatrixXd A = take_rows(panel.values, jobs[k].rows1);
      Eigen::MatrixXd B = take_rows(panel.values, jobs[k].rows2);
      if (jobs[k].transpose) {
        A.transposeInPlace();
        B.transposeInPlace();
      }
      if (opts.standardize) {
        standardize_columns(A);
        standardize_columns(B);
      }
      out.rows1 = A.rows();
      out.rows2 = B.rows();
      out.cols = A.cols();
      out.gsv = gsv_values(A, B);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  std::map<std::tuple<Eigen::Index, Eigen::Index, Eigen::Index>, std::size_t> null_of;
  for (const auto& p : sweep.pairs)
    if (p.ok()) null_of.emplace(std::tuple{p.rows1, p.rows2, p.cols}, 0);
  for (auto& [shape, idx] : null_of) {
    idx = sweep.nulls.size();
    const auto [n1, n2, m] = shape;
    sweep.nulls.push_back(simulate_gsv_null(n1, n2, m, opts.null_reps, opts.seed, opts.level, opts.standardize));
  }
  for (auto& p : sweep.pairs) {
    if (!p.ok()) continue;
    const auto& null = sweep.nulls[null_of.at({p.rows1, p.rows2, p.cols})];
    p.log_lower = null.log_lower();
    p.log_upper = null.log_upper();
    p.fraction_outside = null.fraction_outside(p.gsv);
  }
  return sweep;
}

void write_gsvd_sweep(std::ostream& values, std::ostream& summary, const GsvdSweep& sweep) {
  values << "pair,index,gsv,log_gsv,theta,outside\n";
  summary << "pair,rows1,rows2,cols,log_lower,log_upper,fraction_outside,error\n";
  for (const auto& p : sweep.pairs) {
    summary << p.label << ',';
    if (p.ok()) {
      summary << p.rows1 << ',' << p.rows2 << ',' << p.cols << ',' << csv::format_double(p.log_lower) << ','
              << csv::format_double(p.log_upper) << ',' << csv::format_double(p.fraction_outside) << ",\n";
      for (Eigen::Index i = 0; i < p.gsv.size(); ++i) {
        const double lg = std::log(p.gsv(i));
        const bool outside = lg < p.log_lower || lg > p.log_upper;
        values << p.label << ',' << i + 1 << ',' << csv::format_double(p.gsv(i)) << ',' << csv::format_double(lg)
               << ',' << csv::format_double(std::atan(p.gsv(i)) - std::numbers::pi / 4) << ',' << (outside ? 1 : 0)
               << '\n';
      }
    } else {
      summary << ",,,,,," << p.error << '\n';
    }
  }
}

void plot_gsvd_sweep(std::ostream& os, const std::string& title, const GsvdSweep& sweep) {
  std::vector<std::string> labels;
  svg::LineSeries hi{"max log gsv", {}}, lo{"min log gsv", {}};
  for (const auto& p : sweep.pairs) {
    labels.push_back(p.label);
    if (p.ok() && p.gsv.size() > 0) {
      hi.y.push_back(std::log(p.gsv.maxCoeff()));
      lo.y.push_back(std::log(p.gsv.minCoeff()));
    } else {
      hi.y.push_back(kNaN);
      lo.y.push_back(kNaN);
    }
  }
  std::vector<svg::HLine> lines;
  if (sweep.nulls.size() == 1) {
    lines.push_back({"null lower", sweep.nulls[0].log_lower()});
    lines.push_back({"null upper", sweep.nulls[0].log_upper()});
  }
  svg::write_line(os, title, labels, {hi, lo}, lines);
}

// ---------------------------------------------------------------------------

ChangeSplit change_summary(const std::string& track, const std::vector<double>& values,
                           const std::vector<std::string>& labels) {
  if (values.size() != labels.size()) throw UsageError("change summary: labels do not match values");
  std::vector<double> x;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::isfinite(values[i])) {
      x.push_back(values[i]);
      where.push_back(i);
    }
  const std::size_t m = x.size();
  if (m < 8) throw UsageError("change summary for '" + track + "' needs at least 8 points");

  auto sse = [&](std::size_t a, std::size_t b, double& mean) {
    mean = 0.0;
    for (std::size_t i = a; i < b; ++i) mean += x[i];
    mean /= static_cast<double>(b - a);
    double s = 0.0;
    for (std::size_t i = a; i < b; ++i) s += (x[i] - mean) * (x[i] - mean);
    return s;
  };

  ChangeSplit out;
  out.track = track;
  out.n = m;
  double grand = 0.0;
  const double total = sse(0, m, grand);
  if (!(total > 0.0)) {
    out.mean_before = out.mean_after = grand;
    return out;
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_s = 0;
  for (std::size_t s = 2; s + 2 <= m; ++s) {
    double ma = 0.0, mb = 0.0;
    const double within = sse(0, s, ma) + sse(s, m, mb);
    if (within < best) {
      best = within;
      best_s = s;
      out.mean_before = ma;
      out.mean_after = mb;
    }
  }
  out.split = where[best_s];
  out.split_label = labels[where[best_s]];
  out.ratio = best > 0.0 ? std::max(0.0, total - best) / best : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<ChangeSplit> run_change_summary(const YearlySpectralSeries& series) {
  std::vector<ChangeSplit> out;
  const auto labels = series.labels();
  for (const char* name : {"median", "top", "q10", "q20", "q30", "q40", "q50", "q60", "q70", "q80", "q90"})
    out.push_back(change_summary(name, series.track(name), labels));
  return out;
}

std::vector<ChangeSplit> run_change_summary(const std::vector<SbResult>& series) {
  std::vector<double> v;
  std::vector<std::string> labels;
  for (const auto& r : series) {
    v.push_back(r.ok() ? r.value : kNaN);
    labels.push_back(r.slice);
  }
  return {change_summary("sb", v, labels)};
}

void write_change_summary(std::ostream& os, const std::vector<ChangeSplit>& rows) {
  os << "track,n,split,ratio,mean_before,mean_after\n";
  for (const auto& r : rows)
    os << r.track << ',' << r.n << ',' << r.split_label << ',' << csv::format_double(r.ratio) << ','
       << csv::format_double(r.mean_before) << ',' << csv::format_double(r.mean_after) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<PhaseSummary> run_enso_stratification(const std::vector<SbResult>& series, const EnsoTable& enso) {
  std::map<EnsoPhase, std::vector<double>> by_phase;
  for (const auto& r : series) {
    const int year = slice_year(r.slice);
    const auto it = enso.find(year);
    if (it == enso.end()) throw DataError("no ENSO phase for year " + std::to_string(year));
    if (r.ok()) by_phase[it->second].push_back(r.value);
  }
  std::vector<PhaseSummary> out;
  for (auto& [phase, values] : by_phase) {
    const auto q = quartiles(values);
    PhaseSummary s;
    s.phase = phase;
    s.count = values.size();
    s.median = q.median;
    s.q1 = q.q1;
    s.q3 = q.q3;
    s.iqr = q.q3 - q.q1;
    s.values = std::move(values);
    out.push_back(std::move(s));
  }
  return out;
}

void write_enso_summary(std::ostream& os, const std::vector<PhaseSummary>& groups) {
  os << "phase,count,median,q1,q3,iqr\n";
  for (const auto& g : groups)
    os << to_string(g.phase) << ',' << g.count << ',' << csv::format_double(g.median) << ','
       << csv::format_double(g.q1) << ',' << csv::format_double(g.q3) << ',' << csv::format_double(g.iqr) << '\n';
}

void plot_enso_summary(std::ostream& os, const std::string& title, const std::vector<PhaseSummary>& groups) {
  std::vector<svg::BoxGroup> boxes;
  for (const auto& g : groups) boxes.push_back({std::string(to_string(g.phase)), g.values});
  svg::write_boxplot(os, title, boxes);
}

// ---------------------------------------------------------------------------

SingularVectorStrata run_singular_vector_strata(const SvdFactorization<double>& f, const CalendarIndex& calendar,
                                                Eigen::Index components) {
  if (static_cast<std::size_t>(f.U.rows()) != calendar.n_days())
    throw UsageError("singular-vector strata: factor rows do not match calendar days");
  const Eigen::Index kmax = std::min(components, f.U.cols());
  auto summarize = [](int comp, const std::string& group, std::vector<double> values) {
    StratumRow row;
    row.component = comp;
    row.group = group;
    row.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    const auto q = quartiles(values);
    row.q1 = q.q1;
    row.median = q.median;
    row.q3 = q.q3;
    row.values = std::move(values);
    return row;
  };
  SingularVectorStrata out;
  for (Eigen::Index k = 0; k < kmax; ++k) {
    std::map<unsigned, std::vector<double>> month;
    std::map<std::pair<int, bool>, std::vector<double>> daytype;
    for (std::size_t i = 0; i < calendar.n_days(); ++i) {
      const double u = f.U(static_cast<Eigen::Index>(i), k);
      month[calendar[i].month].push_back(u);
      daytype[{calendar[i].year, calendar[i].weekend}].push_back(u);
    }
    const int comp = static_cast<int>(k + 1);
    for (auto& [m, v] : month) {
      char label[4];
      std::snprintf(label, sizeof label, "%02u", m);
      out.by_month.push_back(summarize(comp, label, std::move(v)));
    }
    for (auto& [key, v] : daytype)
      out.by_year_daytype.push_back(
          summarize(comp, std::to_string(key.first) + (key.second ? "/weekend" : "/weekday"), std::move(v)));
  }
  return out;
}

void write_strata(std::ostream& os, const std::vector<StratumRow>& rows) {
  os << "component,group,n,mean,median,q1,q3\n";
  for (const auto& r : rows)
    os << r.component << ',' << r.group << ',' << r.n << ',' << csv::format_double(r.mean) << ','
       << csv::format_double(r.median) << ',' << csv::format_double(r.q1) << ',' << csv::format_double(r.q3) << '\n';
}

void plot_strata(std::ostream& os, const std::string& title, const std::vector<StratumRow>& rows, int component) {
  std::vector<svg::BoxGroup> boxes;
  for (const auto& r : rows)
    if (r.component == component) boxes.push_back({r.group, r.values});
  svg::write_boxplot(os, title, boxes);
}

// ---------------------------------------------------------------------------

void write_spectrum(std::ostream& eigs, std::ostream& edges, const SpectralSummary& s) {
  eigs << "index,eigenvalue,significant\n";
  std::vector<bool> sig(static_cast<std::size_t>(s.eigenvalues.size()), false);
  for (auto i : s.significant) sig[static_cast<std::size_t>(i)] = true;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    eigs << i + 1 << ',' << csv::format_double(s.eigenvalues(i)) << ',' << (sig[static_cast<std::size_t>(i)] ? 1 : 0)
         << '\n';
  const auto mp = mp_support(s.aspect());
  edges << "quantity,value\n"
        << "n_obs," << s.n_obs << "\np_dim," << s.p_dim << "\naspect," << csv::format_double(s.aspect())
        << "\nmp_lower," << csv::format_double(mp.lower) << "\nmp_upper," << csv::format_double(mp.upper)
        << "\nsignificant," << s.significant_count << "\nmedian," << csv::format_double(s.median()) << '\n';
}

void write_max_corr(std::ostream& os, const MaxCorrTable& t) {
  os << "grid_id,partner_id,corr,dlat,dlon\n";
  for (const auto& r : t.rows)
    os << r.grid_id << ',' << r.partner_id << ',' << csv::format_double(r.corr) << ',' << csv::format_double(r.dlat)
       << ',' << csv::format_double(r.dlon) << '\n';
}

WeightMatrix make_weights(const GridSet& grids, const RunConfig& cfg) {
  return cfg.weight_kind == WeightKind::Lag1Adjacency ? adjacency_weights(grids, cfg.neighborhood)
                                                      : expdecay_weights(grids, cfg.weight_scale);
}

}  // namespace dtrkit
