#include "spectraforge/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace spectraforge {

namespace {

constexpr char kSpbMagic[4] = {'S', 'P', 'B', '1'};
constexpr char kBlobMagic[4] = {'S', 'F', 'C', '1'};

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

// Row-major float64 payload, byte-swapped on big-endian hosts.
void write_payload(std::ostream& out, const Matrix& matrix) {
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor buffer = matrix;
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(sizeof(double) * buffer.size()));
  } else {
    for (Eigen::Index k = 0; k < buffer.size(); ++k) {
      std::uint64_t bits;
      std::memcpy(&bits, buffer.data() + k, sizeof(bits));
      char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
      out.write(bytes, 8);
    }
  }
}

Matrix read_payload(std::istream& in, std::uint32_t rows, std::uint32_t cols,
                    const std::string& context) {
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  std::vector<double> values(count);
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(sizeof(double) * count));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(double) * count) {
      throw FormatError(context + ": truncated payload");
    }
  } else {
    for (std::size_t k = 0; k < count; ++k) {
      unsigned char bytes[8];
      in.read(reinterpret_cast<char*>(bytes), 8);
      if (in.gcount() != 8) throw FormatError(context + ": truncated payload");
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
      std::memcpy(&values[k], &bits, sizeof(double));
    }
  }
  Matrix matrix(rows, cols);
  std::size_t pos = 0;
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) matrix(i, j) = values[pos++];
  return matrix;
}

std::string spb_header(const Matrix& matrix) {
  std::string header(kSpbMagic, 4);
  header.push_back('\0');  // dtype 0 = float64
  append_u32_le(header, static_cast<std::uint32_t>(matrix.rows()));
  append_u32_le(header, static_cast<std::uint32_t>(matrix.cols()));
  header.append(20, '\0');
  return header;
}

// Parses an SPB stream positioned at a header. Returns the matrix.
Matrix read_spb_stream(std::istream& in, const std::string& context) {
  unsigned char header[kSpbHeaderSize];
  in.read(reinterpret_cast<char*>(header), kSpbHeaderSize);
  if (static_cast<std::size_t>(in.gcount()) != kSpbHeaderSize) {
    throw FormatError(context + ": file shorter than the SPB header");
  }
  if (std::memcmp(header, kSpbMagic, 4) != 0) {
    throw FormatError(context + ": bad magic, expected 'SPB1'");
  }
  if (header[4] != 0) {
    throw FormatError(context + ": unsupported dtype tag " + std::to_string(header[4]));
  }
  const std::uint32_t rows = read_u32_le(header + 5);
  const std::uint32_t cols = read_u32_le(header + 9);
  if (rows < 1 || cols < 1) {
    throw FormatError(context + ": dimensions must be at least 1x1");
  }
  return read_payload(in, rows, cols, context);
}

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

Matrix load_spb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Matrix matrix = read_spb_stream(in, path.string());
  in.peek();
  if (!in.eof()) throw FormatError(path.string() + ": trailing bytes after payload");
  return matrix;
}

void save_spb(const Matrix& matrix, const std::filesystem::path& path) {
  if (matrix.rows() < 1 || matrix.cols() < 1) {
    throw SpecError("refusing to save an empty matrix to '" + path.string() + "'");
  }
  if (!matrix.allFinite()) {
    throw DataError("refusing to save non-finite values to '" + path.string() + "'");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string header = spb_header(matrix);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_payload(out, matrix);
  out.flush();
  if (!out.good()) throw IoError("write failed for '" + path.string() + "'");
}

Matrix load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= stripped.size()) {
      std::size_t comma = stripped.find(',', start);
      if (comma == std::string::npos) comma = stripped.size();
      const std::string token = trim(stripped.substr(start, comma - start));
      double value = 0.0;
      const auto [ptr, ec] =
          std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec == std::errc::result_out_of_range) {
        throw DataError(path.string() + ": value out of float64 range: '" + token + "'");
      }
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw FormatError(path.string() + ": cannot parse '" + token + "' as float64");
      }
      if (!std::isfinite(value)) {
        throw DataError(path.string() + ": non-finite value '" + token + "'");
      }
      row.push_back(value);
      start = comma + 1;
      if (comma == stripped.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path.string() + ": ragged row with " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) {
    throw FormatError(path.string() + ": no data rows");
  }
  Matrix matrix(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      matrix(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return matrix;
}

Spectrum2D load_matrix(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open '" + path.string() + "' for reading");
  char magic[4] = {};
  probe.read(magic, 4);
  const bool is_spb = probe.gcount() == 4 && std::memcmp(magic, kSpbMagic, 4) == 0;
  probe.close();

  Spectrum2D spectrum;
  spectrum.id = path.stem().string();
  spectrum.data = is_spb ? load_spb(path) : load_csv(path);
  if (!spectrum.data.allFinite()) {
    throw DataError(path.string() + ": matrix contains non-finite values");
  }
  return spectrum;
}

void save_matrix(const Spectrum2D& spectrum, const std::filesystem::path& path) {
  validate(spectrum);
  save_spb(spectrum.data, path);
}

namespace {

nlohmann::json manifest_to_json(const Manifest& manifest) {
  nlohmann::json doc;
  doc["labels"] = nlohmann::json::array();
  for (const auto& label : manifest.labels) doc["labels"].push_back(label.name);
  doc["records"] = nlohmann::json::array();
  for (const auto& entry : manifest.entries) {
    nlohmann::json record;
    record["id"] = entry.id;
    record["path"] = entry.path;
    record["label"] = entry.label ? nlohmann::json(entry.label->name) : nlohmann::json();
    record["provenance"] = to_string(entry.provenance);
    record["scale_state"] = to_string(entry.scale_state);
    doc["records"].push_back(std::move(record));
  }
  return doc;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what());
  }
  Manifest manifest;
  try {
    for (const auto& name : doc.at("labels")) manifest.labels.push_back({name});
    for (const auto& record : doc.at("records")) {
      ManifestEntry entry;
      entry.id = record.at("id");
      entry.path = record.at("path");
      if (record.contains("label") && !record["label"].is_null()) {
        entry.label = Label{record["label"].get<std::string>()};
      }
      entry.provenance =
          provenance_from_string(record.value("provenance", std::string("original")));
      entry.scale_state =
          scale_state_from_string(record.value("scale_state", std::string("raw")));
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what());
  }
  std::sort(manifest.labels.begin(), manifest.labels.end());
  manifest.labels.erase(std::unique(manifest.labels.begin(), manifest.labels.end()),
                        manifest.labels.end());
  return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open manifest '" + path.string() + "' for writing");
  out << manifest_to_json(manifest).dump(2) << "\n";
  if (!out.good()) throw IoError("write failed for '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const Manifest manifest = load_manifest(manifest_path);
  const std::filesystem::path base = manifest_path.parent_path();
  std::vector<Spectrum2D> records;
  records.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) {
    Spectrum2D spectrum = load_matrix(base / entry.path);
    spectrum.id = entry.id;
    spectrum.label = entry.label;
    spectrum.provenance = entry.provenance;
    spectrum.scale_state = entry.scale_state;
    records.push_back(std::move(spectrum));
  }
  Dataset dataset;
  dataset.records = std::move(records);
  dataset.labels = manifest.labels;
  validate(dataset);
  return dataset;
}

std::string sanitize_filename(const std::string& id) {
  std::string name;
  name.reserve(id.size());
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    name.push_back(ok ? c : '_');
  }
  if (name.empty()) name = "record";
  return name;
}

std::filesystem::path save_dataset(const Dataset& dataset,
                                   const std::filesystem::path& dir) {
  validate(dataset);
  std::error_code ec;
  std::filesystem::create_directories(dir / "records", ec);
  if (ec) throw IoError("cannot create '" + (dir / "records").string() + "'");

  Manifest manifest;
  manifest.labels = dataset.labels;
  std::set<std::string> used;
  for (const auto& record : dataset.records) {
    std::string base = sanitize_filename(record.id);
    std::string name = base;
    int suffix = 1;
    while (!used.insert(name).second) name = base + "_" + std::to_string(suffix++);
    const std::string rel = "records/" + name + ".spb";
    save_spb(record.data, dir / rel);
    ManifestEntry entry;
    entry.id = record.id;
    entry.path = rel;
    entry.label = record.label;
    entry.provenance = record.provenance;
    entry.scale_state = record.scale_state;
    manifest.entries.push_back(std::move(entry));
  }
  const std::filesystem::path manifest_path = dir / "manifest.json";
  save_manifest(manifest, manifest_path);
  return manifest_path;
}

void write_blob(const std::filesystem::path& path, const nlohmann::json& header,
                const std::vector<Matrix>& blocks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string text = header.dump();
  std::string prefix(kBlobMagic, 4);
  append_u32_le(prefix, static_cast<std::uint32_t>(text.size()));
  out.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& block : blocks) {
    if (block.rows() < 1 || block.cols() < 1) {
      throw SpecError("blob block must be non-empty in '" + path.string() + "'");
    }
    const std::string block_header = spb_header(block);
    out.write(block_header.data(), static_cast<std::streamsize>(block_header.size()));
    write_payload(out, block);
  }
  out.flush();
  if (!out.good()) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<nlohmann::json, std::vector<Matrix>> read_blob(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kBlobMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic, expected 'SFC1'");
  }
  unsigned char len_bytes[4];
  in.read(reinterpret_cast<char*>(len_bytes), 4);
  if (in.gcount() != 4) throw FormatError(path.string() + ": truncated header length");
  const std::uint32_t header_len = read_u32_le(len_bytes);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (static_cast<std::uint32_t>(in.gcount()) != header_len) {
    throw FormatError(path.string() + ": truncated JSON header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON header: " + e.what());
  }
  std::vector<Matrix> blocks;
  while (true) {
    in.peek();
    if (in.eof()) break;
    blocks.push_back(read_spb_stream(in, path.string()));
  }
  return {std::move(header), std::move(blocks)};
}

}  // namespace spectraforge
