#ifndef CROSSMODAL_SERIALIZE_HPP
#define CROSSMODAL_SERIALIZE_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crossmodal/data_synth.hpp"
#include "crossmodal/errors.hpp"
#include "crossmodal/tensor.hpp"

namespace crossmodal {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace io_detail {

template <class T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw DataError(std::string("truncated file while reading ") + what);
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what) {
  const auto n = read_pod<std::uint64_t>(is, what);
  if (n > (1ull << 30)) throw DataError(std::string("implausible string length in ") + what);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw DataError(std::string("truncated file while reading ") + what);
  return s;
}

inline void write_doubles(std::ostream& os, const std::vector<double>& v) {
  write_pod<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> read_doubles(std::istream& is, const char* what) {
  const auto n = read_pod<std::uint64_t>(is, what);
  if (n > (1ull << 32)) throw DataError(std::string("implausible array length in ") + what);
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw DataError(std::string("truncated file while reading ") + what);
  return v;
}

}  // namespace io_detail

// ---- checkpoint: versioned binary, magic header, named parameter blobs ----

struct Checkpoint {
  std::uint32_t version = 1;
  std::uint64_t config_hash = 0;
  std::uint32_t epoch = 0;
  double best_valid_loss = 0.0;
  double lr = 0.0;
  ParamMap params;
};

inline constexpr char kCheckpointMagic[4] = {'X', 'M', 'C', 'K'};

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  using namespace io_detail;
  os.write(kCheckpointMagic, 4);
  write_pod<std::uint32_t>(os, ck.version);
  write_pod<std::uint64_t>(os, ck.config_hash);
  write_pod<std::uint32_t>(os, ck.epoch);
  write_pod<double>(os, ck.best_valid_loss);
  write_pod<double>(os, ck.lr);
  write_pod<std::uint64_t>(os, ck.params.size());
  for (const auto& [name, p] : ck.params) {  // std::map: stable byte order
    write_string(os, name);
    write_pod<std::uint64_t>(os, p.shape.size());
    for (auto d : p.shape) write_pod<std::uint64_t>(os, d);
    write_doubles(os, p.value);
  }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open checkpoint file for writing: " + path);
  write_checkpoint(os, ck);
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

// expected_config_hash == 0 skips the compatibility check.
inline Checkpoint read_checkpoint(std::istream& is, std::uint64_t expected_config_hash = 0) {
  using namespace io_detail;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw DataError("not a checkpoint file (bad magic)");
  Checkpoint ck;
  ck.version = read_pod<std::uint32_t>(is, "version");
  if (ck.version != 1)
    throw DataError("unsupported checkpoint version " + std::to_string(ck.version));
  ck.config_hash = read_pod<std::uint64_t>(is, "config hash");
  if (expected_config_hash != 0 && ck.config_hash != expected_config_hash)
    throw DataError("checkpoint config hash mismatch: file was written by a different "
                    "model configuration");
  ck.epoch = read_pod<std::uint32_t>(is, "epoch");
  ck.best_valid_loss = read_pod<double>(is, "best valid loss");
  ck.lr = read_pod<double>(is, "lr");
  const auto n = read_pod<std::uint64_t>(is, "param count");
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = read_string(is, "param name");
    Parameter p;
    const auto ndim = read_pod<std::uint64_t>(is, "param rank");
    for (std::uint64_t d = 0; d < ndim; ++d)
      p.shape.push_back(read_pod<std::uint64_t>(is, "param dim"));
    p.value = read_doubles(is, "param data");
    if (numel(p.shape) != p.value.size())
      throw DataError("corrupt checkpoint: parameter '" + name + "' shape/data mismatch");
    ck.params.emplace(std::move(name), std::move(p));
  }
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path,
                                  std::uint64_t expected_config_hash = 0) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint file: " + path);
  return read_checkpoint(is, expected_config_hash);
}

// ---- corpus: header (version, dims, frame budget, taxonomy) + records ----

inline constexpr char kCorpusMagic[4] = {'X', 'M', 'D', 'S'};

inline void write_corpus(const std::string& path, const Corpus& corpus) {
  using namespace io_detail;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open corpus file for writing: " + path);
  os.write(kCorpusMagic, 4);
  write_pod<std::uint32_t>(os, 1);  // version
  write_pod<std::uint64_t>(os, corpus.config.dim_video);
  write_pod<std::uint64_t>(os, corpus.config.dim_audio);
  write_pod<std::uint64_t>(os, corpus.config.frames);
  write_pod<std::uint64_t>(os, corpus.config.seed);
  write_pod<double>(os, corpus.certificate.single_modality_hit1);
  write_pod<double>(os, corpus.certificate.joint_alignment_hit1);
  // taxonomy as full-path rows, in node-id order
  write_pod<std::uint64_t>(os, corpus.taxonomy.size());
  for (const auto& node : corpus.taxonomy.nodes()) write_string(os, node.full_path);

  auto write_split = [&](const std::vector<MultiModalExample>& split) {
    write_pod<std::uint64_t>(os, split.size());
    for (const auto& ex : split) {
      write_pod<std::uint64_t>(os, ex.id);
      write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ex.true_length));
      write_pod<std::uint8_t>(os, ex.correlated ? 1 : 0);
      write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ex.labels.size()));
      for (int l : ex.labels) write_string(os, corpus.taxonomy.node(l).full_path);
      write_doubles(os, ex.video);
      write_doubles(os, ex.audio);
    }
  };
  write_split(corpus.train);
  write_split(corpus.valid);
  write_split(corpus.test);
  if (!os) throw DataError("failed writing corpus: " + path);
}

inline Corpus read_corpus(const std::string& path) {
  using namespace io_detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open corpus file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCorpusMagic, 4) != 0)
    throw DataError("not a corpus file (bad magic): " + path);
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != 1) throw DataError("unsupported corpus version " + std::to_string(version));
  Corpus corpus;
  corpus.config.dim_video = read_pod<std::uint64_t>(is, "dim_video");
  corpus.config.dim_audio = read_pod<std::uint64_t>(is, "dim_audio");
  corpus.config.frames = read_pod<std::uint64_t>(is, "frames");
  corpus.config.seed = read_pod<std::uint64_t>(is, "seed");
  corpus.certificate.single_modality_hit1 = read_pod<double>(is, "certificate");
  corpus.certificate.joint_alignment_hit1 = read_pod<double>(is, "certificate");
  const auto n_nodes = read_pod<std::uint64_t>(is, "taxonomy size");
  for (std::uint64_t i = 0; i < n_nodes; ++i) {
    const std::string path_str = read_string(is, "taxonomy row");
    if (!corpus.taxonomy.contains(path_str)) corpus.taxonomy.add_path(path_str);
  }
  auto read_split = [&](std::vector<MultiModalExample>& split) {
    const auto n = read_pod<std::uint64_t>(is, "split size");
    split.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      MultiModalExample ex;
      ex.id = read_pod<std::uint64_t>(is, "example id");
      ex.frames = corpus.config.frames;
      ex.dim_video = corpus.config.dim_video;
      ex.dim_audio = corpus.config.dim_audio;
      ex.true_length = read_pod<std::uint32_t>(is, "true length");
      ex.correlated = read_pod<std::uint8_t>(is, "correlated flag") != 0;
      const auto n_labels = read_pod<std::uint32_t>(is, "label count");
      for (std::uint32_t l = 0; l < n_labels; ++l)
        ex.labels.insert(corpus.taxonomy.find(read_string(is, "label")));
      ex.video = read_doubles(is, "video frames");
      ex.audio = read_doubles(is, "audio frames");
      if (ex.video.size() != ex.frames * ex.dim_video ||
          ex.audio.size() != ex.frames * ex.dim_audio)
        throw DataError("corrupt corpus: frame matrix size mismatch in example " +
                        std::to_string(ex.id));
      split.push_back(std::move(ex));
    }
  };
  read_split(corpus.train);
  read_split(corpus.valid);
  read_split(corpus.test);
  return corpus;
}

}  // namespace crossmodal

#endif
