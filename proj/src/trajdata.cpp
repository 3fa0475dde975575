#include "mstf/trajdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mstf/errors.hpp"

namespace mstf {

namespace {

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_i64(const std::string& s, int64_t& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

bool parse_f64(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && std::isfinite(out);
}

}  // namespace

ManeuverKind maneuver_from_string(const std::string& s) {
  if (s == "lane-keep") return ManeuverKind::lane_keep;
  if (s == "left-change") return ManeuverKind::left_change;
  if (s == "right-change") return ManeuverKind::right_change;
  throw DataError("unknown maneuver kind '" + s + "'");
}

std::string to_string(ManeuverKind k) {
  switch (k) {
    case ManeuverKind::lane_keep: return "lane-keep";
    case ManeuverKind::left_change: return "left-change";
    case ManeuverKind::right_change: return "right-change";
  }
  return "?";
}

std::vector<Sample> gen_synthetic(const ManeuverSpec& spec, int count, int t_h, int t_f,
                                  double rate, Rng& rng) {
  if (count < 1) throw DataError("gen_synthetic: count must be >= 1");
  if (t_h < 1 || t_f < 1 || rate <= 0.0) {
    throw DataError("gen_synthetic: horizons and rate must be positive");
  }
  if (spec.speed_min <= 0.0 || spec.speed_max < spec.speed_min) {
    throw DataError("gen_synthetic: speed range must be positive");
  }
  if (spec.noise_sigma < 0.0) throw DataError("gen_synthetic: noise sigma must be >= 0");

  const int len = t_h + t_f;
  const double dt = 1.0 / rate;
  const double total = (len - 1) * dt;

  double lateral = 0.0;
  if (spec.kind == ManeuverKind::left_change) lateral = spec.lateral;
  if (spec.kind == ManeuverKind::right_change) lateral = -spec.lateral;

  std::vector<Sample> out;
  out.reserve(static_cast<size_t>(count));
  for (int s = 0; s < count; ++s) {
    Rng sr = rng.derive(static_cast<uint64_t>(s));
    const double speed = sr.uniform(spec.speed_min, spec.speed_max);
    const Pt start{sr.uniform(-100.0, 100.0), sr.uniform(-50.0, 50.0)};

    // Lane changes take 40% of the window; the midpoint is uniform over the
    // range where the transition fits entirely inside the window.
    const double duration = 0.4 * total;
    double center = 0.0;
    if (lateral != 0.0) {
      center = sr.uniform(duration / 2.0, total - duration / 2.0);
    }

    Sample sample;
    sample.track_id = s;
    std::vector<Pt> pts(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) {
      const double t = i * dt;
      double y = start.y;
      if (lateral != 0.0) {
        y += lateral * smoothstep((t - (center - duration / 2.0)) / duration);
      }
      Pt p{start.x + speed * t, y};
      if (spec.noise_sigma > 0.0) {
        p.x += sr.gaussian(0.0, spec.noise_sigma);
        p.y += sr.gaussian(0.0, spec.noise_sigma);
      }
      pts[static_cast<size_t>(i)] = p;
    }
    sample.history.assign(pts.begin(), pts.begin() + t_h);
    sample.future.assign(pts.begin() + t_h, pts.end());
    sample.mask.values.assign(static_cast<size_t>(t_h), 1);
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<Sample> ingest_csv(const std::string& path, int t_h, int t_f, int stride,
                               IngestReport* report) {
  if (t_h < 1 || t_f < 1 || stride < 1) {
    throw DataError("ingest_csv: horizons and stride must be >= 1");
  }
  std::ifstream f(path);
  if (!f) throw DataError("ingest_csv: cannot open '" + path + "'");

  IngestReport local;
  IngestReport& rep = report ? *report : local;

  std::string line;
  if (!std::getline(f, line)) throw DataError("ingest_csv: '" + path + "' is empty");
  std::vector<std::string> header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("ingest_csv: '" + path + "' is missing required column '" + name + "'");
    }
    return static_cast<size_t>(it - header.begin());
  };
  const size_t c_track = col("track_id"), c_frame = col("frame"), c_x = col("x"), c_y = col("y");

  struct Row {
    int64_t frame;
    Pt p;
  };
  std::map<int64_t, std::vector<Row>> tracks;  // sorted by id for determinism
  int64_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++rep.rows_total;
    std::vector<std::string> fields = split_csv_line(line);
    auto bad = [&](const std::string& why) {
      ++rep.rows_malformed;
      rep.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    const size_t need = std::max({c_track, c_frame, c_x, c_y}) + 1;
    if (fields.size() < need) {
      bad("expected at least " + std::to_string(need) + " fields, got " +
          std::to_string(fields.size()));
      continue;
    }
    int64_t tid, frame;
    Pt p;
    if (!parse_i64(fields[c_track], tid) || !parse_i64(fields[c_frame], frame)) {
      bad("non-integer track_id or frame");
      continue;
    }
    if (!parse_f64(fields[c_x], p.x) || !parse_f64(fields[c_y], p.y)) {
      bad("non-numeric coordinates");
      continue;
    }
    std::vector<Row>& rows = tracks[tid];
    if (!rows.empty() && frame <= rows.back().frame) {
      bad("non-monotonic frame " + std::to_string(frame) + " in track " + std::to_string(tid));
      continue;
    }
    rows.push_back({frame, p});
  }
  rep.tracks = static_cast<int64_t>(tracks.size());

  const int len = t_h + t_f;
  std::vector<Sample> out;
  for (const auto& [tid, rows] : tracks) {
    const int n = static_cast<int>(rows.size());
    for (int w = 0; w + len <= n; w += stride) {
      bool contiguous = true;
      for (int j = 1; j < len; ++j) {
        if (rows[static_cast<size_t>(w + j)].frame != rows[static_cast<size_t>(w)].frame + j) {
          contiguous = false;
          break;
        }
      }
      if (!contiguous) {
        ++rep.windows_discarded_gap;
        continue;
      }
      Sample s;
      s.track_id = tid;
      s.history.reserve(static_cast<size_t>(t_h));
      s.future.reserve(static_cast<size_t>(t_f));
      for (int j = 0; j < t_h; ++j) s.history.push_back(rows[static_cast<size_t>(w + j)].p);
      for (int j = t_h; j < len; ++j) s.future.push_back(rows[static_cast<size_t>(w + j)].p);
      s.mask.values.assign(static_cast<size_t>(t_h), 1);
      out.push_back(std::move(s));
    }
  }
  return out;
}

Sample normalized(const Sample& s) {
  if (s.history.empty()) throw DataError("normalized: empty history");
  if (s.mask.len() != static_cast<int>(s.history.size())) {
    throw DataError("normalized: mask/history length mismatch");
  }
  int origin_idx = -1;
  for (int i = s.mask.len() - 1; i >= 0; --i) {
    if (s.mask.values[static_cast<size_t>(i)]) {
      origin_idx = i;
      break;
    }
  }
  if (origin_idx < 0) throw DataError("normalized: mask has no observed step");

  Sample out = s;
  const Pt origin = s.history[static_cast<size_t>(origin_idx)];
  for (Pt& p : out.history) p = p - origin;
  for (Pt& p : out.future) p = p - origin;
  out.norm.origin = origin;
  out.norm.rotation = 0.0;
  return out;
}

Pt denormalize(Pt p, const NormFrame& frame) {
  if (frame.rotation != 0.0) {
    const double c = std::cos(frame.rotation), s = std::sin(frame.rotation);
    p = Pt{c * p.x - s * p.y, s * p.x + c * p.y};
  }
  return p + frame.origin;
}

std::vector<Pt> denormalize(const std::vector<Pt>& pts, const NormFrame& frame) {
  std::vector<Pt> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = denormalize(pts[i], frame);
  return out;
}

ModelInput prepare_input(const Sample& s, const SequenceMask& mask) {
  Sample masked = s;
  masked.mask = mask;
  Sample norm = normalized(masked);
  std::vector<Pt> hidden = apply_mask(norm.history, mask);

  ModelInput in;
  in.mask = mask;
  in.frame = norm.norm;
  const int t_h = static_cast<int>(hidden.size());
  const int t_f = static_cast<int>(norm.future.size());
  in.x_miss = Tensor({t_h, 2});
  for (int i = 0; i < t_h; ++i) {
    in.x_miss.at(i, 0) = hidden[static_cast<size_t>(i)].x;
    in.x_miss.at(i, 1) = hidden[static_cast<size_t>(i)].y;
  }
  in.future = Tensor({t_f, 2});
  for (int i = 0; i < t_f; ++i) {
    in.future.at(i, 0) = norm.future[static_cast<size_t>(i)].x;
    in.future.at(i, 1) = norm.future[static_cast<size_t>(i)].y;
  }
  return in;
}

SplitIndices split_by_track(const std::vector<Sample>& samples, Rng rng, double train_frac,
                            double val_frac) {
  std::vector<int64_t> ids;
  for (const Sample& s : samples) ids.push_back(s.track_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  // Fisher-Yates over the sorted id list.
  for (size_t i = ids.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
    std::swap(ids[i - 1], ids[j]);
  }
  const size_t n_train = static_cast<size_t>(std::floor(train_frac * static_cast<double>(ids.size())));
  const size_t n_val = static_cast<size_t>(std::floor(val_frac * static_cast<double>(ids.size())));

  std::map<int64_t, int> bucket;  // 0 train, 1 val, 2 test
  for (size_t i = 0; i < ids.size(); ++i) {
    bucket[ids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  }
  SplitIndices out;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    switch (bucket[samples[static_cast<size_t>(i)].track_id]) {
      case 0: out.train.push_back(i); break;
      case 1: out.val.push_back(i); break;
      default: out.test.push_back(i); break;
    }
  }
  return out;
}

std::vector<Sample> take(const std::vector<Sample>& samples, const std::vector<int>& idx) {
  std::vector<Sample> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(samples[static_cast<size_t>(i)]);
  return out;
}

}  // namespace mstf
