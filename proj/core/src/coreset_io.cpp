#include "dupsketch/coreset_io.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace dupsketch {

namespace {

using nlohmann::json;

json to_json(const WeightedCoreset& coreset, const CoresetHeader& header) {
  json out;
  out["header"] = {{"p", header.p},
                   {"eps", header.eps},
                   {"seed", header.seed},
                   {"kappa_bound", header.kappa_bound}};
  json entries = json::array();
  for (const auto& e : coreset.entries) {
    json row = json::array();
    for (Eigen::Index c = 0; c < e.row.size(); ++c) row.push_back(e.row[c]);
    json item;
    item["tag"] = e.tag ? json(*e.tag) : json(nullptr);
    item["weight"] = e.weight;
    item["row"] = std::move(row);
    entries.push_back(std::move(item));
  }
  out["entries"] = std::move(entries);
  return out;
}

}  // namespace

std::string coreset_to_json(const WeightedCoreset& coreset, const CoresetHeader& header) {
  return to_json(coreset, header).dump(2);
}

void write_coreset_json(std::ostream& out, const WeightedCoreset& coreset, const CoresetHeader& header) {
  out << coreset_to_json(coreset, header) << '\n';
}

LoadedCoreset coreset_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("coreset json: ") + e.what());
  }
  LoadedCoreset out;
  try {
    const json& h = doc.at("header");
    out.header.p = h.at("p").get<double>();
    out.header.eps = h.at("eps").get<double>();
    out.header.seed = h.at("seed").get<std::uint64_t>();
    out.header.kappa_bound = h.at("kappa_bound").get<double>();
    out.coreset.p = out.header.p;
    out.coreset.seed = out.header.seed;
    Eigen::Index dim = -1;
    for (const json& item : doc.at("entries")) {
      const json& row = item.at("row");
      if (dim < 0) dim = static_cast<Eigen::Index>(row.size());
      if (static_cast<Eigen::Index>(row.size()) != dim) throw Error("coreset json: ragged rows");
      CoresetEntry e;
      e.row.resize(dim);
      for (Eigen::Index c = 0; c < dim; ++c) e.row[c] = row[static_cast<std::size_t>(c)].get<double>();
      if (!item.at("tag").is_null()) e.tag = item.at("tag").get<Tag>();
      e.weight = item.at("weight").get<double>();
      e.index = out.coreset.entries.size();
      e.probability = std::pow(e.weight, -out.header.p);
      out.coreset.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("coreset json: ") + e.what());
  }
  return out;
}

LoadedCoreset read_coreset_json(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  return coreset_from_json(buf.str());
}

}  // namespace dupsketch
