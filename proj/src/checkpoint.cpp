#include "text2lip/checkpoint.hpp"

#include "text2lip/errors.hpp"
#include "text2lip/io_util.hpp"

namespace t2l {

namespace {
constexpr char kMagic[8] = {'T', '2', 'L', '1', 'C', 'K', 'P', 'T'};
constexpr int kFormatVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const nlohmann::json& config, const ParamStore& params) {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["config"] = config;
  auto& tensors = header["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : params.items)
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
  std::string header_bytes = header.dump();

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  append_u64_le(out, header_bytes.size());
  out += header_bytes;
  for (const auto& [name, t] : params.items)
    append_f64_le(out, t.data().data(), t.data().size());
  atomic_write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string in = read_file(path);
  if (in.size() < sizeof(kMagic) + 8 ||
      in.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a checkpoint file");
  std::uint64_t header_len = read_u64_le(in, sizeof(kMagic));
  std::size_t payload_at = sizeof(kMagic) + 8 + header_len;
  if (payload_at > in.size())
    throw FormatError(path.string() + ": truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.substr(sizeof(kMagic) + 8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format_version", -1) != kFormatVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version");

  Checkpoint ckpt;
  ckpt.config = header.value("config", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    Shape shape = entry.at("shape").get<Shape>();
    std::int64_t numel = 1;
    for (int d : shape) {
      if (d <= 0)
        throw FormatError(path.string() + ": bad shape for tensor " + name);
      numel *= d;
    }
    if (payload_at + static_cast<std::size_t>(numel) * 8 > in.size())
      throw FormatError(path.string() + ": truncated payload for tensor " +
                        name);
    std::vector<double> vals(numel);
    read_f64_le(in, payload_at, vals.data(), vals.size());
    payload_at += static_cast<std::size_t>(numel) * 8;
    ckpt.params.add(name, Tensor::from_data(std::move(shape), std::move(vals),
                                            /*requires_grad=*/true));
  }
  if (payload_at != in.size())
    throw FormatError(path.string() + ": trailing bytes after tensor payloads");
  return ckpt;
}

}  // namespace t2l
