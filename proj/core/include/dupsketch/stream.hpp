#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "dupsketch/types.hpp"

namespace dupsketch {

/// Reference deduplication: rows of the first occurrence of each tag, in
/// order of first appearance. Throws when a tag reappears with a row that
/// is not bitwise identical.
Matrix dedup(const std::vector<TaggedRow>& stream, Eigen::Index dim);

/// Tags in order of first appearance, matching the rows of dedup().
std::vector<Tag> dedup_tags(const std::vector<TaggedRow>& stream);

/// Rows with positive final frequency, sorted lexicographically. Throws if
/// any prefix drives a frequency negative.
Matrix dedup_turnstile(const std::vector<TurnstileUpdate>& stream, Eigen::Index dim);

/// Final frequencies keyed by row, in lexicographic row order.
std::vector<std::pair<std::vector<std::int64_t>, std::int64_t>> turnstile_frequencies(
    const std::vector<TurnstileUpdate>& stream);

/// Checks tag consistency without materialising the dedup matrix.
void check_tag_consistency(const std::vector<TaggedRow>& stream);

bool rows_bitwise_equal(const Vector& a, const Vector& b);

// CSV formats. Blank lines and lines starting with '#' are skipped.
//   tagged:    tag,v1,...,vd
//   turnstile: +|-,v1,...,vd
std::vector<TaggedRow> read_tagged_csv(std::istream& in);
std::vector<TurnstileUpdate> read_turnstile_csv(std::istream& in);
std::vector<TaggedRow> read_tagged_csv_file(const std::string& path);
std::vector<TurnstileUpdate> read_turnstile_csv_file(const std::string& path);
void write_tagged_csv(std::ostream& out, const std::vector<TaggedRow>& stream);
void write_turnstile_csv(std::ostream& out, const std::vector<TurnstileUpdate>& stream);

/// Dimension of the rows in a stream; throws if rows disagree.
Eigen::Index stream_dimension(const std::vector<TaggedRow>& stream);
Eigen::Index stream_dimension(const std::vector<TurnstileUpdate>& stream);

/// Untagged row stream view: each row gets a fresh tag 1..n.
std::vector<TaggedRow> tag_rows(const Matrix& a);

}  // namespace dupsketch
