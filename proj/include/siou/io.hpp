#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "siou/box.hpp"
#include "siou/error.hpp"
#include "siou/eval.hpp"
#include "siou/rating.hpp"

namespace siou::io {

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::monostate, std::string, long long, double>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
      throw InvalidArgument("table row width does not match header");
    }
    rows.push_back(std::move(row));
  }
};

enum class Format { Csv, Json };

inline Format parse_format(std::string_view s) {
  if (s == "csv") {
    return Format::Csv;
  }
  if (s == "json") {
    return Format::Json;
  }
  throw InvalidArgument("unknown output format '" + std::string(s) + "'");
}

/// Nine significant digits, "%.9g" style; non-finite values print as nan/inf/-inf.
inline std::string format_number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  return out + "\"";
}

inline std::string render_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    os << (i ? "," : "") << csv_escape(t.columns[i]);
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) {
        os << ',';
      }
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) {
              os << csv_escape(v);
            } else if constexpr (std::is_same_v<T, double>) {
              os << format_number(v);
            } else if constexpr (std::is_same_v<T, long long>) {
              os << v;
            }
          },
          row[i]);
    }
    os << '\n';
  }
  return os.str();
}

/// JSON array of row objects. Doubles are rounded to nine significant digits
/// first so CSV and JSON carry the same values; non-finite values become null.
inline std::string render_json(const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              obj[t.columns[i]] = nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) {
                obj[t.columns[i]] = std::stod(format_number(v));
              } else {
                obj[t.columns[i]] = nullptr;
              }
            } else {
              obj[t.columns[i]] = v;
            }
          },
          row[i]);
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

inline std::string render(const Table& t, Format f) {
  return f == Format::Csv ? render_csv(t) : render_json(t);
}

/// Writes `text` to `path` ("-" or empty: standard output). Files are written
/// to a sibling temporary and renamed into place.
inline void write_text(const std::string& text, const std::string& path,
                       std::ostream& stdout_stream = std::cout) {
  if (path.empty() || path == "-") {
    stdout_stream << text;
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) {
      throw DataError("cannot open '" + tmp + "' for writing");
    }
    os << text;
    if (!os) {
      throw DataError("failed writing '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into '" + path + "'");
  }
}

inline void write_table(const Table& t, const std::string& path, Format f,
                        std::ostream& stdout_stream = std::cout) {
  write_text(render(t, f), path, stdout_stream);
}

// ---------------------------------------------------------------------------
// Detection / ground-truth files
//
// {
//   "images":      [{"id": 1}, ...],
//   "annotations": [{"image_id": 1, "category": "car", "bbox": [x_min, y_min, w, h]}, ...],
//   "detections":  [{"image_id": 1, "category": "car", "bbox": [...], "score": 0.9}, ...]
// }
// Ids may be strings or integers. "category_id" is accepted for "category".

struct BoxDataset {
  std::vector<std::string> images;
  std::vector<GroundTruthRecord> ground_truth;
  std::vector<DetectionRecord> detections;
};

namespace detail {

inline std::string id_string(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) {
    return v.get<std::string>();
  }
  if (v.is_number_integer()) {
    return std::to_string(v.get<long long>());
  }
  throw ParseError(where + ": id must be a string or an integer");
}

inline Box parse_bbox(const nlohmann::json& rec, const std::string& where) {
  if (!rec.contains("bbox") || !rec["bbox"].is_array() || rec["bbox"].size() != 4) {
    throw ParseError(where + ": 'bbox' must be an array [x_min, y_min, w, h]");
  }
  double v[4];
  for (int i = 0; i < 4; ++i) {
    if (!rec["bbox"][i].is_number()) {
      throw ParseError(where + ": bbox entries must be numbers");
    }
    v[i] = rec["bbox"][i].get<double>();
  }
  try {
    return Box::from_corner(v[0], v[1], v[2], v[3]);
  } catch (const InvalidBox& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline std::string category_of(const nlohmann::json& rec, const std::string& where) {
  if (rec.contains("category")) {
    return id_string(rec["category"], where + ".category");
  }
  if (rec.contains("category_id")) {
    return id_string(rec["category_id"], where + ".category_id");
  }
  throw ParseError(where + ": missing 'category'");
}

} // namespace detail

inline BoxDataset parse_boxes(const std::string& text, const std::string& source = "<input>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw ParseError(source + ": top level must be an object");
  }
  BoxDataset out;
  std::set<std::string> known_images;
  if (doc.contains("images")) {
    const auto& imgs = doc["images"];
    if (!imgs.is_array()) {
      throw ParseError(source + ": 'images' must be an array");
    }
    for (std::size_t i = 0; i < imgs.size(); ++i) {
      const std::string where = source + ": images[" + std::to_string(i) + "]";
      if (!imgs[i].is_object() || !imgs[i].contains("id")) {
        throw ParseError(where + ": missing 'id'");
      }
      out.images.push_back(detail::id_string(imgs[i]["id"], where));
      known_images.insert(out.images.back());
    }
  }
  auto image_of = [&](const nlohmann::json& rec, const std::string& where) {
    if (!rec.contains("image_id")) {
      throw ParseError(where + ": missing 'image_id'");
    }
    std::string id = detail::id_string(rec["image_id"], where + ".image_id");
    if (doc.contains("images") && !known_images.count(id)) {
      throw ParseError(where + ": unknown image_id '" + id + "'");
    }
    return id;
  };
  auto array_of = [&](const char* key) -> const nlohmann::json* {
    if (!doc.contains(key)) {
      return nullptr;
    }
    if (!doc[key].is_array()) {
      throw ParseError(source + ": '" + key + "' must be an array");
    }
    return &doc[key];
  };

  if (const auto* anns = array_of("annotations")) {
    for (std::size_t i = 0; i < anns->size(); ++i) {
      const auto& rec = (*anns)[i];
      const std::string where = source + ": annotations[" + std::to_string(i) + "]";
      if (!rec.is_object()) {
        throw ParseError(where + ": record must be an object");
      }
      out.ground_truth.push_back(
          {image_of(rec, where), detail::category_of(rec, where), detail::parse_bbox(rec, where)});
    }
  }
  if (const auto* dets = array_of("detections")) {
    for (std::size_t i = 0; i < dets->size(); ++i) {
      const auto& rec = (*dets)[i];
      const std::string where = source + ": detections[" + std::to_string(i) + "]";
      if (!rec.is_object()) {
        throw ParseError(where + ": record must be an object");
      }
      if (!rec.contains("score") || !rec["score"].is_number()) {
        throw ParseError(where + ": missing numeric 'score'");
      }
      const double score = rec["score"].get<double>();
      if (!std::isfinite(score)) {
        throw ParseError(where + ": score must be finite");
      }
      out.detections.push_back({image_of(rec, where), detail::category_of(rec, where),
                                detail::parse_bbox(rec, where), score});
    }
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline BoxDataset load_boxes(const std::string& path) { return parse_boxes(read_file(path), path); }

inline std::string dump_boxes(const BoxDataset& data) {
  nlohmann::ordered_json doc;
  auto bbox = [](const Box& b) {
    return nlohmann::ordered_json::array({b.left(), b.bottom(), b.w(), b.h()});
  };
  doc["images"] = nlohmann::ordered_json::array();
  for (const auto& id : data.images) {
    doc["images"].push_back({{"id", id}});
  }
  doc["annotations"] = nlohmann::ordered_json::array();
  for (const auto& g : data.ground_truth) {
    doc["annotations"].push_back(
        {{"image_id", g.image_id}, {"category", g.category}, {"bbox", bbox(g.box)}});
  }
  doc["detections"] = nlohmann::ordered_json::array();
  for (const auto& d : data.detections) {
    doc["detections"].push_back({{"image_id", d.image_id},
                                 {"category", d.category},
                                 {"bbox", bbox(d.box)},
                                 {"score", d.score}});
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Rating files: CSV with header
//   rating,gt_x,gt_y,gt_w,gt_h,px,py,pw,ph[,context,expertise,age]
// Boxes in corner form. Optional columns may be missing or left empty.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(where + ": '" + s + "' is not a number");
  }
  if (used != s.size()) {
    throw ParseError(where + ": '" + s + "' is not a number");
  }
  return v;
}

inline std::optional<bool> parse_flag(const std::string& s, const std::string& where) {
  if (s.empty()) {
    return std::nullopt;
  }
  if (s == "1" || s == "true" || s == "yes" || s == "True" || s == "TRUE") {
    return true;
  }
  if (s == "0" || s == "false" || s == "no" || s == "False" || s == "FALSE") {
    return false;
  }
  throw ParseError(where + ": '" + s + "' is not a boolean flag");
}

} // namespace detail

inline std::vector<RatingRecord> parse_ratings(const std::string& text,
                                               const std::string& source = "<input>") {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> col;
  std::vector<RatingRecord> out;
  static const char* kRequired[] = {"rating", "gt_x", "gt_y", "gt_w", "gt_h",
                                    "px",     "py",   "pw",   "ph"};
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        col[fields[i]] = i;
      }
      for (const char* name : kRequired) {
        if (!col.count(name)) {
          throw ParseError(source + ": header is missing column '" + name + "'");
        }
      }
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    auto field = [&](const std::string& name) -> std::string {
      const auto it = col.find(name);
      if (it == col.end() || it->second >= fields.size()) {
        return {};
      }
      return fields[it->second];
    };
    auto number = [&](const char* name) {
      return detail::parse_double(field(name), where + " column " + name);
    };
    const double rating = number("rating");
    if (rating != std::floor(rating) || rating < 1.0 || rating > 5.0) {
      throw ParseError(where + ": rating must be an integer in 1..5 (got " + field("rating") + ")");
    }
    try {
      RatingRecord rec{static_cast<int>(rating),
                       Box::from_corner(number("gt_x"), number("gt_y"), number("gt_w"),
                                        number("gt_h")),
                       Box::from_corner(number("px"), number("py"), number("pw"), number("ph")),
                       detail::parse_flag(field("context"), where + " column context"),
                       detail::parse_flag(field("expertise"), where + " column expertise"),
                       std::nullopt};
      const std::string age = field("age");
      if (!age.empty()) {
        const double a = detail::parse_double(age, where + " column age");
        if (a != std::floor(a)) {
          throw ParseError(where + ": age must be an integer");
        }
        rec.age = static_cast<int>(a);
      }
      out.push_back(rec);
    } catch (const InvalidBox& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (col.empty()) {
    throw ParseError(source + ": missing header line");
  }
  return out;
}

inline std::vector<RatingRecord> load_ratings(const std::string& path) {
  return parse_ratings(read_file(path), path);
}

} // namespace siou::io
