#include "gde/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gde {

namespace {
constexpr char kMagic[8] = {'G', 'D', 'E', 'F', 'C', 'K', 'P', '1'};

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const std::string& descriptor_json,
                     const ParamStore& params, const std::vector<std::uint64_t>& seeds) {
  nlohmann::json header;
  header["descriptor"] =
      descriptor_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(descriptor_json);
  header["seeds"] = seeds;
  nlohmann::json views = nlohmann::json::array();
  for (const auto& name : params.view_order()) {
    const ViewInfo& v = params.info(name);
    views.push_back({{"name", name}, {"offset", v.offset}, {"rows", v.rows}, {"cols", v.cols}});
  }
  header["views"] = views;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, 1);
  write_pod<std::uint64_t>(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  write_pod<std::uint64_t>(out, params.size());
  out.write(reinterpret_cast<const char*>(params.theta().data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  Checkpoint ck;
  ck.version = read_pod<std::uint32_t>(in);
  if (ck.version != 1) {
    throw std::runtime_error("load_checkpoint: unsupported version " +
                             std::to_string(ck.version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("load_checkpoint: truncated header");
  const nlohmann::json header = nlohmann::json::parse(header_text);
  ck.descriptor = header.at("descriptor").dump();
  for (const auto& s : header.at("seeds")) ck.seeds.push_back(s.get<std::uint64_t>());
  for (const auto& v : header.at("views")) {
    ViewInfo info;
    info.offset = v.at("offset").get<std::size_t>();
    info.rows = v.at("rows").get<int>();
    info.cols = v.at("cols").get<int>();
    ck.views.emplace_back(v.at("name").get<std::string>(), info);
  }
  const auto count = read_pod<std::uint64_t>(in);
  ck.theta.resize(count);
  in.read(reinterpret_cast<char*>(ck.theta.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("load_checkpoint: truncated parameters");
  return ck;
}

void restore_params(const Checkpoint& ck, ParamStore& params) {
  if (params.size() != ck.theta.size()) {
    throw std::runtime_error("restore_params: parameter count mismatch (store " +
                             std::to_string(params.size()) + ", checkpoint " +
                             std::to_string(ck.theta.size()) + ")");
  }
  for (const auto& [name, info] : ck.views) {
    if (!params.has_view(name)) {
      throw std::runtime_error("restore_params: store lacks view " + name);
    }
    const ViewInfo& mine = params.info(name);
    if (mine.offset != info.offset || mine.rows != info.rows || mine.cols != info.cols) {
      throw std::runtime_error("restore_params: view layout mismatch for " + name);
    }
  }
  params.theta() = ck.theta;
}

}  // namespace gde
