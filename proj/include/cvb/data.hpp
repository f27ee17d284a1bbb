// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_DATA_HPP_
#define CVB_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvb/expfam.hpp"
#include "cvb/lda.hpp"
#include "cvb/mog.hpp"
#include "cvb/quant.hpp"

namespace cvb {

// Malformed input file; the message names the file and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Five unit-covariance 2-D Gaussians with equal weights, centred at (0,0) and
// (+-R, +-R).
struct MogGenSpec {
  double R = 5.0;
  std::size_t n_per_cluster = 100;
  std::uint64_t seed = 1;
};

// Points are emitted cluster by cluster in the order
// (0,0), (R,R), (R,-R), (-R,R), (-R,-R).
MogData generate_mog(const MogGenSpec& spec);
std::vector<Eigen::Vector2d> mog_centers(double R);

struct GeneratedCorpus {
  Corpus corpus;
  Eigen::MatrixXd true_phi;    // K x V
  Eigen::MatrixXd true_theta;  // D x K
};

// Standard LDA generative process; cells are sorted by (doc, word).
GeneratedCorpus generate_corpus(std::size_t K, std::size_t num_docs,
                                std::size_t vocab_size, std::size_t doc_len,
                                double alpha, double beta, std::uint64_t seed);

struct GeneratedAlignments {
  AlignmentMatrix alignments;
  std::vector<double> true_theta;
  std::vector<std::size_t> true_transcript;  // per read
};

// theta ~ Dir(1); each read's source transcript ~ theta; `ambiguity`
// candidates per read (the source plus distinct decoys).  Each candidate gets
// an alignment score x ~ N(0, sigma^2) for the source and N(-1, sigma^2) for
// decoys, and log-likelihoods are the exact score likelihood ratios
// ln N(x; 0, sigma^2) - ln N(x; -1, sigma^2), so the data are drawn from the
// model being fitted.
GeneratedAlignments generate_alignments(std::size_t num_transcripts,
                                        std::size_t num_reads,
                                        std::size_t ambiguity,
                                        double noise_sigma, std::uint64_t seed);

// Logits rho ~ N(0, sigma^2) around the uniform table.
LogitTable random_init(const RowLayout& layout, std::uint64_t seed,
                       double sigma = 0.1);

// Points CSV: one observation per line, comma separated, no header.
MogData load_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::filesystem::path& path, const MogData& data);

// UCI docword: D, V, NNZ header lines then "docId wordId count" (1-based).
// The vocabulary file, when given, has one word per line.
Corpus load_docword(const std::filesystem::path& path,
                    const std::filesystem::path& vocab_path = {});
void write_docword(const std::filesystem::path& path, const Corpus& corpus);
void write_vocab(const std::filesystem::path& path, const Corpus& corpus);

// "#reads=N #transcripts=M" header then "readId transcriptId logLik"
// (0-based).
AlignmentMatrix load_alignments(const std::filesystem::path& path);
void write_alignments(const std::filesystem::path& path,
                      const AlignmentMatrix& alignments);

}  // namespace cvb

#endif  // CVB_DATA_HPP_
