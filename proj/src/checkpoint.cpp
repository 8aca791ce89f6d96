#include "plaae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "plaae/error.hpp"

namespace plaae::checkpoint {

static_assert(std::numeric_limits<double>::is_iec559,
              "checkpoint payload assumes IEEE-754 doubles");

namespace {

using nlohmann::json;

void append_le64(std::string& out, uint64_t w) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((w >> (8 * i)) & 0xff));
}

uint64_t read_le64(const unsigned char* p) {
  uint64_t w = 0;
  for (int i = 0; i < 8; ++i) w |= static_cast<uint64_t>(p[i]) << (8 * i);
  return w;
}

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  raise(ErrorKind::io, path + ": " + what);
}

}  // namespace

void save_checkpoint(const std::string& path, const Snapshot& snap) {
  json header;
  header["schema_version"] = snap.schema_version;
  header["model"] = json::parse(model::model_config_json(snap.config));
  header["step"] = snap.step;
  // Decimal strings: JSON numbers cannot carry full u64 range faithfully.
  json rng = json::array();
  for (uint64_t w : snap.rng_state) rng.push_back(std::to_string(w));
  header["rng_state"] = rng;

  json table = json::array();
  int64_t offset = 0;
  for (const NamedTensor& t : snap.tensors) {
    json row;
    row["name"] = t.name;
    row["shape"] = t.shape;
    row["offset"] = offset;
    row["count"] = static_cast<int64_t>(t.data.size());
    table.push_back(row);
    offset += static_cast<int64_t>(t.data.size());
  }
  header["tensors"] = table;

  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + static_cast<size_t>(offset) * 8);
  for (const NamedTensor& t : snap.tensors)
    for (double v : t.data) append_le64(out, std::bit_cast<uint64_t>(v));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) bad(path, "cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) bad(path, "write failed");
}

Snapshot load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) bad(path, "cannot open checkpoint");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  size_t nl = 0;
  while (nl < bytes.size() && bytes[nl] != '\n') ++nl;
  if (nl == bytes.size()) bad(path, "missing header line");

  json header;
  try {
    header = json::parse(std::string(bytes.begin(), bytes.begin() + static_cast<long>(nl)));
  } catch (const std::exception& e) {
    bad(path, std::string("header is not valid JSON: ") + e.what());
  }

  Snapshot snap;
  try {
    snap.schema_version = header.at("schema_version").get<int>();
    snap.config = model::model_config_from_json(header.at("model").dump());
    snap.step = header.at("step").get<int64_t>();
    const auto& rng = header.at("rng_state");
    if (!rng.is_array() || rng.size() != 4) bad(path, "rng_state must hold 4 words");
    for (size_t i = 0; i < 4; ++i)
      snap.rng_state[i] = std::stoull(rng[i].get<std::string>());

    const unsigned char* payload = bytes.data() + nl + 1;
    const int64_t payload_words = static_cast<int64_t>((bytes.size() - nl - 1) / 8);
    for (const auto& row : header.at("tensors")) {
      NamedTensor t;
      t.name = row.at("name").get<std::string>();
      t.shape = row.at("shape").get<std::vector<int>>();
      const int64_t offset = row.at("offset").get<int64_t>();
      const int64_t count = row.at("count").get<int64_t>();
      if (offset < 0 || count < 0 || offset + count > payload_words)
        bad(path, "tensor '" + t.name + "' overruns the payload");
      int64_t shape_n = 1;
      for (int d : t.shape) shape_n *= d;
      if (shape_n != count)
        bad(path, "tensor '" + t.name + "' count disagrees with its shape");
      t.data.resize(static_cast<size_t>(count));
      for (int64_t j = 0; j < count; ++j)
        t.data[static_cast<size_t>(j)] =
            std::bit_cast<double>(read_le64(payload + (offset + j) * 8));
      snap.tensors.push_back(std::move(t));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    bad(path, std::string("malformed header: ") + e.what());
  }
  return snap;
}

const NamedTensor* find_tensor(const Snapshot& snap, const std::string& name) {
  for (const NamedTensor& t : snap.tensors)
    if (t.name == name) return &t;
  return nullptr;
}

Snapshot snapshot_model(model::PlaaeModel& m, int64_t step) {
  Snapshot snap;
  snap.config = m.cfg;
  snap.step = step;
  model::visit_params(m, [&](const std::string& name, Tensor& t) {
    snap.tensors.push_back({name, t.shape, t.data});
  });
  return snap;
}

void restore_model(model::PlaaeModel& m, const Snapshot& snap) {
  model::visit_params(m, [&](const std::string& name, Tensor& t) {
    const NamedTensor* src = find_tensor(snap, name);
    if (!src) raise(ErrorKind::io, "checkpoint lacks tensor '" + name + "'");
    if (src->shape != t.shape)
      raise(ErrorKind::shape, "checkpoint tensor '" + name + "' has a different shape");
    t.data = src->data;
  });
}

void append_adam_state(Snapshot& snap, const std::string& prefix,
                       const optim::AdamState& st) {
  for (const auto& [name, m] : st.m)
    snap.tensors.push_back({prefix + "." + name + ".m",
                            {static_cast<int>(m.size())}, m});
  for (const auto& [name, v] : st.v)
    snap.tensors.push_back({prefix + "." + name + ".v",
                            {static_cast<int>(v.size())}, v});
}

optim::AdamState extract_adam_state(const Snapshot& snap, const std::string& prefix) {
  optim::AdamState st;
  st.step = snap.step;
  const std::string head = prefix + ".";
  for (const NamedTensor& t : snap.tensors) {
    if (t.name.size() < head.size() + 2 || t.name.compare(0, head.size(), head) != 0)
      continue;
    const std::string tail = t.name.substr(head.size());
    if (tail.size() > 2 && tail.compare(tail.size() - 2, 2, ".m") == 0)
      st.m[tail.substr(0, tail.size() - 2)] = t.data;
    else if (tail.size() > 2 && tail.compare(tail.size() - 2, 2, ".v") == 0)
      st.v[tail.substr(0, tail.size() - 2)] = t.data;
  }
  return st;
}

}  // namespace plaae::checkpoint
