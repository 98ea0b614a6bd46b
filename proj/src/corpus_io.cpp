#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <string>

#include "castkit/corpus.hpp"
#include "castkit/errors.hpp"

namespace castkit {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
T from_le(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <typename T>
T to_le(T value) {
  return from_le(value);
}

std::string context(const std::filesystem::path& path) {
  return path.string() + ": ";
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(context(path) + "cannot open for writing");
  out.write(kEmbeddingMagic, 4);
  const std::uint32_t dim = to_le(static_cast<std::uint32_t>(store.dim()));
  const std::uint64_t rows = to_le(static_cast<std::uint64_t>(store.row_count()));
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  if constexpr (std::endian::native == std::endian::little) {
    const auto data = store.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size_bytes()));
  } else {
    for (float v : store.data()) {
      const float le = to_le(v);
      out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
  }
  if (!out) throw IoError(context(path) + "write failed");
}

EmbeddingStore read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(context(path) + "cannot open embedding file");
  char magic[4];
  std::uint32_t dim = 0;
  std::uint64_t rows = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  if (!in || std::memcmp(magic, kEmbeddingMagic, 4) != 0)
    throw FormatError(context(path) + "malformed embedding header");
  dim = from_le(dim);
  rows = from_le(rows);
  if (dim == 0) throw FormatError(context(path) + "embedding dim is zero");

  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t expected = 16 + rows * dim * sizeof(float);
  if (file_size != expected)
    throw ConsistencyError(context(path) + "header declares " +
                           std::to_string(rows) + " rows of dim " +
                           std::to_string(dim) + " but file has " +
                           std::to_string(file_size) + " bytes");
  in.seekg(16);
  std::vector<float> data(rows * dim);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw IoError(context(path) + "short read");
  for (float& v : data) v = from_le(v);
  try {
    return EmbeddingStore::from_rows(dim, std::move(data));
  } catch (const IngestError& e) {
    throw IngestError(context(path) + e.what());
  }
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(context(path) + "cannot open manifest");
  Manifest manifest;
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(context(path) + "missing manifest header");
  {
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0] != kManifestMagic ||
        !parse_number(fields[1], manifest.dim) || manifest.dim == 0)
      throw FormatError(context(path) + "malformed manifest header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    auto fail = [&](const std::string& what) {
      return FormatError(context(path) + "line " + std::to_string(line_no) +
                         ": " + what);
    };
    if (fields.size() != 8) throw fail("expected 8 tab-separated fields");
    FaceRecord rec;
    if (!parse_number(fields[0], rec.face_id.value)) throw fail("bad face_id");
    if (!parse_number(fields[1], rec.identity_id.value))
      throw fail("bad identity_id");
    if (!parse_number(fields[2], rec.embedding_index))
      throw fail("bad embedding_index");
    if (!fields[3].empty()) {
      std::uint32_t age = 0;
      if (!parse_number(fields[3], age)) throw fail("bad age");
      rec.attributes.age_years = age;
    }
    if (!fields[4].empty()) {
      rec.attributes.race = parse_race(fields[4]);
      if (!rec.attributes.race) throw fail("bad race");
    }
    if (!fields[5].empty()) {
      rec.attributes.gender = parse_gender(fields[5]);
      if (!rec.attributes.gender) throw fail("bad gender");
    }
    if (!fields[6].empty()) {
      rec.attributes.scenario = parse_scenario(fields[6]);
      if (!rec.attributes.scenario) throw fail("bad scenario");
    }
    if (fields[7] == "1") {
      rec.attributes.masked = true;
    } else if (fields[7] != "0" && !fields[7].empty()) {
      throw fail("bad masked flag");
    }
    manifest.faces.push_back(rec);
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& path,
                    const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(context(path) + "cannot open for writing");
  std::string buf;
  buf.append(kManifestMagic).append("\t").append(std::to_string(manifest.dim));
  buf.push_back('\n');
  for (const auto& f : manifest.faces) {
    const auto& a = f.attributes;
    buf.append(std::to_string(f.face_id.value)).push_back('\t');
    buf.append(std::to_string(f.identity_id.value)).push_back('\t');
    buf.append(std::to_string(f.embedding_index)).push_back('\t');
    if (a.age_years) buf.append(std::to_string(*a.age_years));
    buf.push_back('\t');
    if (a.race) buf.append(to_string(*a.race));
    buf.push_back('\t');
    if (a.gender) buf.append(to_string(*a.gender));
    buf.push_back('\t');
    if (a.scenario) buf.append(to_string(*a.scenario));
    buf.push_back('\t');
    buf.push_back(a.masked ? '1' : '0');
    buf.push_back('\n');
  }
  out << buf;
  if (!out) throw IoError(context(path) + "write failed");
}

Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& embeddings_path) {
  Manifest manifest = read_manifest(manifest_path);
  auto store = std::make_shared<const EmbeddingStore>(
      read_embeddings(embeddings_path));
  if (store->dim() != manifest.dim)
    throw ConsistencyError(context(manifest_path) + "manifest declares dim " +
                           std::to_string(manifest.dim) + " but " +
                           embeddings_path.string() + " has dim " +
                           std::to_string(store->dim()));
  return Corpus::from_faces(std::move(store), std::move(manifest.faces));
}

void write_corpus(const Corpus& corpus,
                  const std::filesystem::path& manifest_path,
                  const std::filesystem::path& embeddings_path) {
  const std::size_t dim = corpus.dim() == 0 ? kDefaultEmbeddingDim : corpus.dim();
  Manifest manifest;
  manifest.dim = dim;
  std::vector<float> rows;
  rows.reserve(corpus.face_count() * dim);
  for (const auto& face : corpus.faces()) {
    FaceRecord rec = face;
    rec.embedding_index = manifest.faces.size();
    const auto row = corpus.store().row(face.embedding_index);
    rows.insert(rows.end(), row.begin(), row.end());
    manifest.faces.push_back(rec);
  }
  EmbeddingStore store = EmbeddingStore::from_rows(dim, std::move(rows));
  write_embeddings(embeddings_path, store);
  write_manifest(manifest_path, manifest);
}

}  // namespace castkit
