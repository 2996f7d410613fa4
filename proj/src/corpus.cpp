#include "ideaflow/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "ideaflow/backends.hpp"
#include "ideaflow/errors.hpp"

namespace ideaflow {

namespace {

constexpr double kNormTolerance = 1e-6;

std::string line_error(std::size_t line_no, const std::string& msg) {
  return "corpus line " + std::to_string(line_no) + ": " + msg;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

struct RawRecord {
  PatentDoc doc;
  std::vector<std::string> citations;
  std::size_t line = 0;
};

RawRecord parse_record(const nlohmann::json& j, std::size_t line_no) {
  if (!j.is_object()) throw ValidationError(line_error(line_no, "record is not an object"));
  auto require_string = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
      throw ValidationError(line_error(line_no, std::string("missing string field '") + key + "'"));
    return it->get<std::string>();
  };
  auto string_array = [&](const char* key) {
    std::vector<std::string> out;
    auto it = j.find(key);
    if (it == j.end()) return out;
    if (!it->is_array())
      throw ValidationError(line_error(line_no, std::string("field '") + key + "' is not an array"));
    for (const auto& v : *it) {
      if (!v.is_string())
        throw ValidationError(line_error(line_no, std::string("non-string entry in '") + key + "'"));
      out.push_back(v.get<std::string>());
    }
    return out;
  };

  RawRecord rec;
  rec.line = line_no;
  rec.doc.id = require_string("id");
  if (rec.doc.id.empty()) throw ValidationError(line_error(line_no, "empty id"));
  rec.doc.abstract = require_string("abstract");

  std::set<std::string> features;
  for (const auto& f : string_array("features")) {
    auto norm = normalize_feature(f);
    if (!norm.empty()) features.insert(std::move(norm));
  }
  rec.doc.features.assign(features.begin(), features.end());
  rec.citations = string_array("citations");

  if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
    if (!it->is_array())
      throw ValidationError(line_error(line_no, "field 'embedding' is not an array"));
    for (const auto& v : *it) {
      if (!v.is_number())
        throw ValidationError(line_error(line_no, "non-numeric embedding entry"));
      rec.doc.embedding.push_back(v.get<double>());
    }
  }
  if (auto it = j.find("ipc_section"); it != j.end() && !it->is_null()) {
    if (!it->is_string() || it->get<std::string>().size() != 1)
      throw ValidationError(line_error(line_no, "ipc_section must be a single character"));
    rec.doc.ipc_section = it->get<std::string>()[0];
  }
  return rec;
}

}  // namespace

Corpus::Corpus(std::size_t dim, std::vector<PatentDoc> docs, std::size_t dangling_citations)
    : dim_(dim), docs_(std::move(docs)), dangling_citations_(dangling_citations) {
  std::sort(docs_.begin(), docs_.end(),
            [](const PatentDoc& a, const PatentDoc& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (!index_.emplace(docs_[i].id, i).second)
      throw ValidationError("duplicate document id '" + docs_[i].id + "'");
  }
}

bool Corpus::contains(std::string_view id) const { return index_.count(std::string(id)) > 0; }

const PatentDoc& Corpus::at(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw ValidationError("unknown document id '" + std::string(id) + "'");
  return docs_[it->second];
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  return parse_corpus(in, options);
}

Corpus parse_corpus(std::istream& in, const CorpusOptions& options) {
  if (options.embedding_source == EmbeddingSource::kIngest && options.embedder == nullptr)
    throw ValidationError("ingest-time embedding requires an embedder backend");

  std::optional<std::size_t> dim;
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(line_error(line_no, std::string("malformed JSON: ") + e.what()));
    }
    if (!dim) {
      if (!j.is_object() || !j.contains("dim") || !j["dim"].is_number_unsigned() ||
          j["dim"].get<std::size_t>() == 0)
        throw ValidationError(line_error(line_no, "expected header {\"dim\": D} with D >= 1"));
      dim = j["dim"].get<std::size_t>();
      continue;
    }
    records.push_back(parse_record(j, line_no));
  }
  if (!dim) return Corpus{};

  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.doc.id).second)
      throw ValidationError(line_error(r.line, "duplicate id '" + r.doc.id + "'"));
  }

  std::vector<PatentDoc> docs;
  std::size_t dangling = 0;
  for (auto& r : records) {
    PatentDoc& doc = r.doc;
    if (options.embedding_source == EmbeddingSource::kIngest) {
      if (options.embedder->dim() != *dim)
        throw ValidationError("embedder dimension " + std::to_string(options.embedder->dim()) +
                              " does not match corpus dimension " + std::to_string(*dim));
      doc.embedding = options.embedder->embed_text(doc.abstract);
    }
    if (doc.embedding.size() != *dim)
      throw ValidationError("document '" + doc.id + "' has embedding dimension " +
                            std::to_string(doc.embedding.size()) + ", expected " +
                            std::to_string(*dim));
    const double norm = l2_norm(doc.embedding);
    if (std::abs(norm - 1.0) > kNormTolerance) {
      if (!options.normalize_embeddings || norm == 0.0 || !std::isfinite(norm))
        throw ValidationError("document '" + doc.id + "' embedding has norm " +
                              std::to_string(norm) + " (unit norm required)");
      normalize_in_place(doc.embedding);
    }
    std::set<std::string> cited;
    for (auto& c : r.citations) {
      if (c == doc.id) continue;
      if (!ids.count(c)) {
        ++dangling;
        continue;
      }
      cited.insert(std::move(c));
    }
    doc.citations.assign(cited.begin(), cited.end());
    docs.push_back(std::move(doc));
  }
  return Corpus(*dim, std::move(docs), dangling);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  if (corpus.dim() == 0 && corpus.empty()) return;
  out << nlohmann::json{{"dim", corpus.dim()}}.dump() << '\n';
  for (const auto& d : corpus.docs()) {
    nlohmann::json j;
    j["id"] = d.id;
    j["abstract"] = d.abstract;
    j["features"] = d.features;
    j["embedding"] = d.embedding;
    j["citations"] = d.citations;
    if (d.ipc_section) j["ipc_section"] = std::string(1, *d.ipc_section);
    out << j.dump() << '\n';
  }
}

std::string normalize_feature(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void normalize_in_place(std::vector<double>& v) {
  const double n = l2_norm(v);
  if (n == 0.0) throw ValidationError("cannot normalize a zero vector");
  for (double& x : v) x /= n;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  // sqrt(na * nb) keeps the expression symmetric under swapping a and b.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

Query embed_query(std::string_view text, const Embedder& embedder) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ValidationError("empty query");
  Query q;
  q.text = std::string(text);
  try {
    q.embedding = embedder.embed_text(text);
  } catch (const BackendError& e) {
    throw BackendError(std::string("embedding the query failed: ") + e.what(), e.raw_text());
  }
  if (q.embedding.size() != embedder.dim())
    throw BackendError("embedder returned dimension " + std::to_string(q.embedding.size()) +
                       ", expected " + std::to_string(embedder.dim()));
  normalize_in_place(q.embedding);
  return q;
}

}  // namespace ideaflow
