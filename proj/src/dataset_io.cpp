#include "qmix/dataset_io.hpp"

#include <fstream>

#include <json.hpp>

#include "qmix/wire.hpp"

namespace qmix {

using nlohmann::json;

void save_dataset(const LabeledDataset& ds, const std::string& path) {
  json header;
  header["format"] = "qds1";
  header["generator"] = ds.generator;
  header["params"] = ds.params_json.empty() ? json::object() : json::parse(ds.params_json);
  header["seed"] = ds.seed;
  header["payload"] = payload_kind_name(ds.kind);
  header["dim"] = ds.dim;
  header["n_records"] = ds.size();
  header["labels"] = ds.labels;
  if (ds.kind == PayloadKind::Genotype)
    header["feature_len"] = ds.genotypes.empty() ? 0 : ds.genotypes.front().size();

  const std::string head = header.dump();
  wire::Bytes bytes;
  wire::put<std::uint32_t>(bytes, static_cast<std::uint32_t>(head.size()));
  wire::put_bytes(bytes, head.data(), head.size());

  switch (ds.kind) {
    case PayloadKind::Pure:
      for (const auto& p : ds.pures) wire::put_cvec(bytes, p.amplitudes());
      break;
    case PayloadKind::Density:
      for (const auto& d : ds.densities) wire::put_cmat(bytes, d.entries());
      break;
    case PayloadKind::Genotype:
      for (const auto& g : ds.genotypes) wire::put_rvec(bytes, g);
      break;
  }
  wire::write_file(path, bytes);
}

LabeledDataset load_dataset(const std::string& path) {
  const wire::Bytes bytes = wire::read_file(path);
  wire::Reader rd(bytes);
  const auto head_len = rd.get<std::uint32_t>();
  std::string head(head_len, '\0');
  rd.get_bytes(head.data(), head_len);

  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    throw IoError(std::string("bad dataset header: ") + e.what());
  }
  if (header.value("format", "") != "qds1") throw IoError("not a qds1 dataset file");

  LabeledDataset ds;
  ds.kind = payload_kind_from_name(header.at("payload").get<std::string>());
  ds.dim = header.at("dim").get<Index>();
  ds.generator = header.value("generator", "");
  ds.params_json = header.contains("params") ? header["params"].dump() : "";
  ds.seed = header.value("seed", std::uint64_t{0});
  ds.labels = header.at("labels").get<std::vector<int>>();
  const int n = header.at("n_records").get<int>();
  if (n != ds.size()) throw IoError("label count does not match record count");

  switch (ds.kind) {
    case PayloadKind::Pure:
      for (int i = 0; i < n; ++i) ds.pures.emplace_back(wire::get_cvec(rd, ds.dim));
      ds.ensure_densities();
      break;
    case PayloadKind::Density:
      for (int i = 0; i < n; ++i)
        ds.densities.emplace_back(DensityMatrix(wire::get_cmat(rd, ds.dim, ds.dim)));
      break;
    case PayloadKind::Genotype: {
      const Index flen = header.at("feature_len").get<Index>();
      for (int i = 0; i < n; ++i) ds.genotypes.emplace_back(wire::get_rvec(rd, flen));
      break;
    }
  }
  if (rd.remaining() != 0) throw IoError("trailing bytes after dataset payload");
  return ds;
}

void export_genotypes_csv(const LabeledDataset& ds, const std::string& path) {
  if (ds.kind != PayloadKind::Genotype)
    throw DomainError("CSV export is only defined for genotype datasets");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  const Index flen = ds.genotypes.empty() ? 0 : ds.genotypes.front().size();
  out << "sample_index,label";
  for (Index j = 0; j < flen; ++j) out << ",g" << j;
  out << "\n";
  for (int i = 0; i < ds.size(); ++i) {
    out << i << "," << ds.labels[i];
    for (Index j = 0; j < flen; ++j) out << "," << ds.genotypes[i](j);
    out << "\n";
  }
}

}  // namespace qmix
