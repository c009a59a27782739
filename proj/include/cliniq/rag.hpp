#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cliniq/gateway.hpp"

namespace cliniq::rag {

struct ChunkingConfig {
  size_t chunk_size = 400;  // tokens per window
  size_t overlap = 50;      // tokens shared with the previous window
};

struct Chunk {
  size_t chunk_id = 0;  // ordinal within the document
  std::string doc_id;
  size_t token_start = 0;
  size_t token_end = 0;  // exclusive
  std::string text;      // space-joined tokens of [token_start, token_end)
};

struct EmbeddingRecord {
  size_t chunk_id = 0;
  std::vector<float> vector;  // unit L2 norm
};

struct RetrievalConfig {
  size_t k = 4;
};

struct Hit {
  size_t chunk_id = 0;
  double score = 0.0;  // cosine similarity
};

struct RagAnswer {
  std::string question;
  std::vector<Hit> retrieved;  // score descending, ties by ascending chunk_id
  std::string context;         // retrieved chunk texts in document order
  std::string answer;
  bool empty_context = false;  // set when the index had nothing to retrieve
};

// Maps text to a fixed-dimension unit vector. Queries and documents must go
// through the same embedder; VectorIndex enforces this by id().
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual size_t dimension() const = 0;
  virtual std::string id() const = 0;
  virtual std::vector<float> embed(const std::string& text) const = 0;
};

// Deterministic offline embedder: signed feature hashing of the lowercased
// token bag (FNV-1a picks the bucket, its top bit the sign), L2-normalized.
// Dimension 384 mirrors common sentence-embedding models. Texts with no
// tokens map to the first basis vector.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(size_t dimension = 384) : dimension_(dimension) {}
  size_t dimension() const override { return dimension_; }
  std::string id() const override;
  std::vector<float> embed(const std::string& text) const override;

 private:
  size_t dimension_;
};

// Remote embedding endpoint speaking {"model","input":[...]} ->
// {"data":[{"embedding":[...]}]}; vectors are re-normalized locally.
class RemoteEmbedder : public Embedder {
 public:
  RemoteEmbedder(gw::EndpointConfig endpoint, std::string model_id, size_t dimension);
  size_t dimension() const override { return dimension_; }
  std::string id() const override;
  std::vector<float> embed(const std::string& text) const override;

 private:
  gw::EndpointConfig endpoint_;
  std::string model_id_;
  size_t dimension_;
};

// Tokenizes once and slides a window of chunk_size tokens with stride
// chunk_size - overlap: starts at 0, stride, 2*stride, ...; the last window
// may be short. Every token lands in at least one chunk.
std::vector<Chunk> chunk_document(const std::string& doc, const std::string& doc_id,
                                  const ChunkingConfig& cfg);

// Exact flat cosine index over unit vectors. Immutable after build; safe for
// concurrent searches.
class VectorIndex {
 public:
  static VectorIndex build(std::vector<EmbeddingRecord> records, size_t dimension,
                           const std::string& embedder_id);

  // Exact top-k by dot product (cosine on unit vectors), score descending,
  // ties broken by ascending chunk_id. Returns fewer than k when smaller.
  std::vector<Hit> search(const std::vector<float>& query, size_t k) const;

  size_t size() const { return records_.size(); }
  size_t dimension() const { return dimension_; }
  const std::string& embedder_id() const { return embedder_id_; }

  // Line-JSON persistence: a header record then one record per vector.
  void save(const std::string& path) const;
  static VectorIndex load(const std::string& path);

 private:
  VectorIndex() = default;
  std::vector<EmbeddingRecord> records_;
  size_t dimension_ = 0;
  std::string embedder_id_;
};

std::vector<EmbeddingRecord> embed_chunks(const std::vector<Chunk>& chunks,
                                          const Embedder& embedder);

// Chunk text persistence alongside the index (chunk_id, bounds, text).
void save_chunks(const std::vector<Chunk>& chunks, const std::string& path);
std::vector<Chunk> load_chunks(const std::string& path);

// Figure-2 pipeline for one question: embed, retrieve top-k, assemble the
// context in document order, ask the endpoint to answer from it. The
// embedder must be the one the index was built with (checked by id).
RagAnswer answer_unstructured_question(const std::string& question,
                                       const VectorIndex& index,
                                       const std::vector<Chunk>& chunks,
                                       const Embedder& embedder, gw::Gateway& gateway,
                                       const gw::EndpointConfig& endpoint,
                                       const RetrievalConfig& cfg,
                                       const std::string& model_id);

}  // namespace cliniq::rag
