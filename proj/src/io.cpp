#include "georf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace georf {

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

using nlohmann::json;

[[noreturn]] void fail_at(const std::string& path, std::size_t line,
                          const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path);
  return file;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  return file;
}

void finish_out(std::ofstream& file, const std::string& path) {
  file.flush();
  if (!file) throw std::runtime_error("write failed for " + path);
}

// Minimal RFC-4180 row: comma separated, double quotes guard commas and
// quotes, CR tolerated before the newline.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

double parse_double(const std::string& field, const std::string& path,
                    std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    fail_at(path, line, "not a number: '" + field + "'");
  return v;
}

std::int64_t parse_int(const std::string& field, const std::string& path,
                       std::size_t line) {
  std::int64_t v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    fail_at(path, line, "not an integer: '" + field + "'");
  return v;
}

json load_json(const std::string& path) {
  auto file = open_in(path);
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return doc;
}

// Outer-ring centroid and shoelace area of a GeoJSON polygon ring.
std::pair<Point, double> ring_centroid_area(const json& ring,
                                            const std::string& path) {
  double area2 = 0.0, cu = 0.0, cv = 0.0;
  const auto n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % n];
    const double cross = a[0].get<double>() * b[1].get<double>() -
                         b[0].get<double>() * a[1].get<double>();
    area2 += cross;
    cu += (a[0].get<double>() + b[0].get<double>()) * cross;
    cv += (a[1].get<double>() + b[1].get<double>()) * cross;
  }
  if (area2 == 0.0) throw std::runtime_error(path + ": zero-area polygon ring");
  return {{cu / (3.0 * area2), cv / (3.0 * area2)}, std::abs(0.5 * area2)};
}

}  // namespace

// ---- events ----

std::vector<EventRecord> read_events_csv(const std::string& path,
                                         std::span<const Severity> high) {
  auto file = open_in(path);
  std::string line;
  if (!std::getline(file, line)) fail_at(path, 1, "empty file");
  const auto header = split_csv(line);
  if (header != std::vector<std::string>{"id", "u", "v", "severity"})
    fail_at(path, 1, "expected header id,u,v,severity");

  std::vector<EventRecord> events;
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4) fail_at(path, line_no, "expected 4 fields");
    EventRecord e;
    e.id = parse_int(fields[0], path, line_no);
    e.location.u = parse_double(fields[1], path, line_no);
    e.location.v = parse_double(fields[2], path, line_no);
    if (!std::isfinite(e.location.u) || !std::isfinite(e.location.v))
      fail_at(path, line_no, "non-finite coordinate");
    const auto sev = parse_severity(fields[3]);
    if (!sev) fail_at(path, line_no, "unknown severity '" + fields[3] + "'");
    e.severity_raw = *sev;
    e.severity_binary =
        std::find(high.begin(), high.end(), *sev) != high.end() ? 1 : 0;
    events.push_back(e);
  }
  return events;
}

void write_events_csv(const std::string& path,
                      std::span<const EventRecord> events) {
  auto file = open_out(path);
  file << "id,u,v,severity\n";
  for (const auto& e : events)
    file << e.id << ',' << format_number(e.location.u) << ','
         << format_number(e.location.v) << ',' << to_string(e.severity_raw)
         << '\n';
  finish_out(file, path);
}

// ---- layers ----

GeoLayer read_layer_csv(const std::string& path, const std::string& name) {
  auto file = open_in(path);
  std::string line;
  if (!std::getline(file, line)) fail_at(path, 1, "empty file");
  const auto header = split_csv(line);
  int weight_col = -1, category_col = -1;
  if (header.size() < 2 || header[0] != "u" || header[1] != "v")
    fail_at(path, 1, "expected header starting u,v");
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "weight") weight_col = static_cast<int>(c);
    else if (header[c] == "category") category_col = static_cast<int>(c);
    else fail_at(path, 1, "unknown column '" + header[c] + "'");
  }

  GeoLayer layer;
  layer.name = name;
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      fail_at(path, line_no, "field count does not match header");
    LayerFeature f;
    f.location.u = parse_double(fields[0], path, line_no);
    f.location.v = parse_double(fields[1], path, line_no);
    if (!std::isfinite(f.location.u) || !std::isfinite(f.location.v))
      fail_at(path, line_no, "non-finite coordinate");
    if (weight_col >= 0) {
      f.weight = parse_double(fields[weight_col], path, line_no);
      if (!(f.weight >= 0.0)) fail_at(path, line_no, "negative weight");
    }
    if (category_col >= 0) f.category = fields[category_col];
    layer.features.push_back(std::move(f));
  }
  return layer;
}

GeoLayer read_layer_geojson(const std::string& path, const std::string& name) {
  const json doc = load_json(path);
  if (doc.value("type", "") != "FeatureCollection")
    throw std::runtime_error(path + ": expected a FeatureCollection");

  GeoLayer layer;
  layer.name = name;
  for (const auto& feature : doc.at("features")) {
    const auto& geom = feature.at("geometry");
    const std::string type = geom.value("type", "");
    LayerFeature f;
    if (type == "Point") {
      const auto& c = geom.at("coordinates");
      f.location = {c.at(0).get<double>(), c.at(1).get<double>()};
    } else if (type == "Polygon") {
      // Centroid point carrying the outer-ring area as weight.
      const auto [centroid, area] =
          ring_centroid_area(geom.at("coordinates").at(0), path);
      f.location = centroid;
      f.weight = area;
    } else if (type == "MultiPolygon") {
      double total = 0.0, cu = 0.0, cv = 0.0;
      for (const auto& poly : geom.at("coordinates")) {
        const auto [centroid, area] = ring_centroid_area(poly.at(0), path);
        total += area;
        cu += centroid.u * area;
        cv += centroid.v * area;
      }
      f.location = {cu / total, cv / total};
      f.weight = total;
    } else {
      throw std::runtime_error(path + ": unsupported geometry '" + type + "'");
    }
    if (feature.contains("properties") && feature["properties"].is_object()) {
      const auto& props = feature["properties"];
      if (props.contains("weight")) f.weight = props["weight"].get<double>();
      if (props.contains("category"))
        f.category = props["category"].get<std::string>();
    }
    if (!std::isfinite(f.location.u) || !std::isfinite(f.location.v))
      throw std::runtime_error(path + ": non-finite coordinate");
    if (!(f.weight >= 0.0)) throw std::runtime_error(path + ": negative weight");
    layer.features.push_back(std::move(f));
  }
  return layer;
}

void write_layer_csv(const std::string& path, const GeoLayer& layer) {
  auto file = open_out(path);
  const bool any_category = std::any_of(
      layer.features.begin(), layer.features.end(),
      [](const LayerFeature& f) { return !f.category.empty(); });
  file << (any_category ? "u,v,weight,category\n" : "u,v,weight\n");
  for (const auto& f : layer.features) {
    file << format_number(f.location.u) << ',' << format_number(f.location.v)
         << ',' << format_number(f.weight);
    if (any_category) file << ',' << csv_escape(f.category);
    file << '\n';
  }
  finish_out(file, path);
}

// ---- boundary ----

std::vector<Polygon> read_boundary_geojson(const std::string& path) {
  const json doc = load_json(path);
  std::vector<Polygon> rings;

  auto add_ring = [&](const json& coords) {
    Polygon ring;
    for (const auto& pt : coords)
      ring.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    // GeoJSON rings repeat the first point at the end; closure is implied here.
    if (ring.size() > 1 && ring.front().u == ring.back().u &&
        ring.front().v == ring.back().v)
      ring.pop_back();
    if (ring.size() >= 3) rings.push_back(std::move(ring));
  };
  auto add_geometry = [&](const json& geom) {
    const std::string type = geom.value("type", "");
    if (type == "Polygon") {
      for (const auto& ring : geom.at("coordinates")) add_ring(ring);
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom.at("coordinates"))
        for (const auto& ring : poly) add_ring(ring);
    } else {
      throw std::runtime_error(path + ": boundary geometry must be polygonal");
    }
  };

  const std::string top = doc.value("type", "");
  if (top == "FeatureCollection") {
    for (const auto& feature : doc.at("features"))
      add_geometry(feature.at("geometry"));
  } else if (top == "Feature") {
    add_geometry(doc.at("geometry"));
  } else {
    add_geometry(doc);
  }
  if (rings.empty()) throw std::runtime_error(path + ": no boundary rings");
  return rings;
}

void write_boundary_geojson(const std::string& path,
                            std::span<const Polygon> rings) {
  auto file = open_out(path);
  file << "{\"type\":\"FeatureCollection\",\"features\":[{\"type\":\"Feature\","
          "\"properties\":{},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[";
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (r) file << ',';
    file << '[';
    const auto& ring = rings[r];
    for (std::size_t i = 0; i <= ring.size(); ++i) {
      const auto& p = ring[i % ring.size()];  // close the ring
      if (i) file << ',';
      file << '[' << format_number(p.u) << ',' << format_number(p.v) << ']';
    }
    file << ']';
  }
  file << "]}}]}\n";
  finish_out(file, path);
}

// ---- feature table ----

void write_feature_table(const std::string& path, const FeatureTable& table) {
  auto file = open_out(path);
  file << "id,u,v,label";
  for (const auto& name : table.features.names) file << ',' << csv_escape(name);
  file << '\n';
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    file << table.ids[i] << ',' << format_number(table.locations[i].u) << ','
         << format_number(table.locations[i].v) << ',' << table.labels[i];
    for (double v : table.features.rows[i]) file << ',' << format_number(v);
    file << '\n';
  }
  finish_out(file, path);
}

FeatureTable read_feature_table(const std::string& path) {
  auto file = open_in(path);
  std::string line;
  if (!std::getline(file, line)) fail_at(path, 1, "empty file");
  const auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "id" || header[1] != "u" ||
      header[2] != "v" || header[3] != "label")
    fail_at(path, 1, "expected header id,u,v,label,<features...>");

  FeatureTable table;
  table.features.names.assign(header.begin() + 4, header.end());
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      fail_at(path, line_no, "field count does not match header");
    table.ids.push_back(parse_int(fields[0], path, line_no));
    table.locations.push_back({parse_double(fields[1], path, line_no),
                               parse_double(fields[2], path, line_no)});
    const auto label = parse_int(fields[3], path, line_no);
    if (label != 0 && label != 1) fail_at(path, line_no, "label must be 0 or 1");
    table.labels.push_back(static_cast<int>(label));
    std::vector<double> row;
    row.reserve(header.size() - 4);
    for (std::size_t c = 4; c < fields.size(); ++c)
      row.push_back(parse_double(fields[c], path, line_no));
    table.features.rows.push_back(std::move(row));
  }
  return table;
}

// ---- selection artifacts ----

void write_selection_csv(const std::string& path, const SelectionReport& report) {
  auto file = open_out(path);
  file << "feature,greater_in,u,p_value,vif,selected\n";
  for (const auto& row : report.rows)
    file << csv_escape(row.name) << ',' << to_string(row.greater_in) << ','
         << format_number(row.u) << ',' << format_number(row.p_value) << ','
         << format_number(row.vif) << ',' << (row.selected ? 1 : 0) << '\n';
  finish_out(file, path);
}

void write_manifest(const std::string& path,
                    std::span<const std::string> names) {
  auto file = open_out(path);
  for (const auto& name : names) file << name << '\n';
  finish_out(file, path);
}

std::vector<std::string> read_manifest(const std::string& path) {
  auto file = open_in(path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

// ---- evaluation artifacts ----

namespace {

std::string opt_str(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace

void write_metrics_csv(const std::string& path, const ConfusionMatrix& cm,
                       const Metrics& m, std::optional<double> r2,
                       std::optional<double> r2_global) {
  auto file = open_out(path);
  file << "metric,value\n";
  file << "tp," << cm.tp << "\nfp," << cm.fp << "\ntn," << cm.tn << "\nfn,"
       << cm.fn << '\n';
  file << "accuracy," << opt_str(m.accuracy) << '\n';
  file << "precision," << opt_str(m.precision) << '\n';
  file << "recall," << opt_str(m.recall) << '\n';
  file << "r2," << opt_str(r2) << '\n';
  file << "r2_global," << opt_str(r2_global) << '\n';
  finish_out(file, path);
}

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
  auto file = open_out(path);
  file << "a,global_pct,local_pct,r2,r2_global,accuracy,precision,recall,"
          "remarks\n";
  for (const auto& row : rows) {
    file << format_number(row.a) << ','
         << std::lround((1.0 - row.a) * 100.0) << ','
         << std::lround(row.a * 100.0) << ',' << format_number(row.r2) << ','
         << format_number(row.r2_global) << ',' << opt_str(row.accuracy) << ','
         << opt_str(row.precision) << ',' << opt_str(row.recall) << ','
         << csv_escape(row.remarks) << '\n';
  }
  finish_out(file, path);
}

// ---- risk surfaces ----

void write_point_surface_geojson(const std::string& path,
                                 std::span<const Point> cells,
                                 std::span<const double> values,
                                 const std::string& property, int decimals) {
  if (cells.size() != values.size())
    throw std::invalid_argument("write_point_surface_geojson: size mismatch");
  auto file = open_out(path);
  file << "{\"type\":\"FeatureCollection\",\"features\":[";
  char buf[32];
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) file << ',';
    std::string value;
    if (decimals >= 0) {
      std::snprintf(buf, sizeof(buf), "%.*f", decimals, values[i]);
      value = buf;
    } else {
      value = format_number(values[i]);
    }
    file << "{\"type\":\"Feature\",\"geometry\":{\"type\":\"Point\","
            "\"coordinates\":["
         << format_number(cells[i].u) << ',' << format_number(cells[i].v)
         << "]},\"properties\":{\"" << property << "\":" << value << "}}";
  }
  file << "]}\n";
  finish_out(file, path);
}

void write_risk_geojson(const std::string& path, std::span<const Point> cells,
                        std::span<const double> risk) {
  write_point_surface_geojson(path, cells, risk, "risk", 6);
}

void write_cells_csv(const std::string& path, std::span<const Point> cells,
                     const FeatureMatrix& features,
                     std::span<const double> risk) {
  auto file = open_out(path);
  file << "u,v";
  for (const auto& name : features.names) file << ',' << csv_escape(name);
  file << ",risk\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    file << format_number(cells[i].u) << ',' << format_number(cells[i].v);
    for (double v : features.rows[i]) file << ',' << format_number(v);
    file << ',' << format_number(risk[i]) << '\n';
  }
  finish_out(file, path);
}

CellTable read_cells_csv(const std::string& path) {
  auto file = open_in(path);
  std::string line;
  if (!std::getline(file, line)) fail_at(path, 1, "empty file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "u" || header[1] != "v" ||
      header.back() != "risk")
    fail_at(path, 1, "expected header u,v,<features...>,risk");

  CellTable table;
  table.features.names.assign(header.begin() + 2, header.end() - 1);
  std::size_t line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      fail_at(path, line_no, "field count does not match header");
    table.cells.push_back({parse_double(fields[0], path, line_no),
                           parse_double(fields[1], path, line_no)});
    std::vector<double> row;
    for (std::size_t c = 2; c + 1 < fields.size(); ++c)
      row.push_back(parse_double(fields[c], path, line_no));
    table.features.rows.push_back(std::move(row));
    table.risk.push_back(parse_double(fields.back(), path, line_no));
  }
  return table;
}

void write_importance_csv(const std::string& path,
                          std::span<const ImportanceRow> rows) {
  auto file = open_out(path);
  file << "feature,importance,direction,t,p_value\n";
  for (const auto& row : rows) {
    file << csv_escape(row.feature) << ',' << format_number(row.importance)
         << ',';
    if (row.zone_test) {
      file << row.zone_test->direction << ','
           << format_number(row.zone_test->t) << ','
           << format_number(row.zone_test->p_two_sided);
    } else {
      file << ",,";
    }
    file << '\n';
  }
  finish_out(file, path);
}

}  // namespace georf
