#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ideaflow {

class Embedder;

/// One literature record: abstract, core-feature set and embedding, plus the
/// citation list used for graph edges.
struct PatentDoc {
  std::string id;
  std::string abstract;
  std::vector<std::string> features;  // normalized, sorted, unique
  std::vector<double> embedding;      // unit L2 norm
  std::vector<std::string> citations;  // only ids present in the corpus
  std::optional<char> ipc_section;

  bool operator==(const PatentDoc&) const = default;
};

struct Query {
  std::string text;
  std::vector<double> embedding;
};

enum class EmbeddingSource {
  kFile,    // every record must carry an `embedding` array
  kIngest,  // embeddings are computed from the abstract by the embedder backend
};

struct CorpusOptions {
  bool normalize_embeddings = false;
  EmbeddingSource embedding_source = EmbeddingSource::kFile;
  const Embedder* embedder = nullptr;  // required for kIngest
};

/// Immutable, id-ordered document collection.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::size_t dim, std::vector<PatentDoc> docs, std::size_t dangling_citations = 0);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  const std::vector<PatentDoc>& docs() const noexcept { return docs_; }
  std::size_t dangling_citations() const noexcept { return dangling_citations_; }

  bool contains(std::string_view id) const;
  /// Throws ValidationError for unknown ids.
  const PatentDoc& at(std::string_view id) const;

 private:
  std::size_t dim_ = 0;
  std::vector<PatentDoc> docs_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dangling_citations_ = 0;
};

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});
Corpus parse_corpus(std::istream& in, const CorpusOptions& options = {});

/// Writes the corpus back in the line-delimited format. Parsing the output
/// and writing it again yields identical bytes.
void write_corpus(std::ostream& out, const Corpus& corpus);

/// Lowercase, trim, and collapse internal whitespace.
std::string normalize_feature(std::string_view raw);

/// Cosine of the angle between a and b. Exactly symmetric in its arguments.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);
void normalize_in_place(std::vector<double>& v);

Query embed_query(std::string_view text, const Embedder& embedder);

}  // namespace ideaflow
