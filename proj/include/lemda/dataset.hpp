#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lemda {

enum class ColumnKind { numeric, categorical, label, identifier, timestamp };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;

    bool operator==(const ColumnSchema&) const = default;
};

// Checks the schema invariants: unique non-empty names, exactly one label.
void validate_schema(std::span<const ColumnSchema> schema);

// Plain-text schema file: one `name=kind` pair per line, '#' starts a comment.
std::vector<ColumnSchema> parse_schema(std::istream& in);
std::vector<ColumnSchema> read_schema_file(const std::filesystem::path& path);
void write_schema(std::ostream& out, std::span<const ColumnSchema> schema);

// A single non-label column. Numeric columns hold reals in `values`.
// Categorical, identifier and timestamp columns hold interned codes in
// `values` with `categories[code]` giving the original text. A categorical
// column that went through encode_categories becomes numeric but keeps its
// code table so WEDF/SF can still see the original strings.
struct Column {
    ColumnSchema schema;
    std::vector<double> values;
    std::vector<std::string> categories;

    const std::string& name() const { return schema.name; }
    ColumnKind kind() const { return schema.kind; }
    bool has_code_table() const { return !categories.empty(); }

    // Original text of a coded cell.
    const std::string& text(std::size_t row) const;
};

// Builds a categorical column, interning `text` in first-appearance order.
Column make_categorical(std::string name, std::span<const std::string> text,
                        ColumnKind kind = ColumnKind::categorical);
Column make_numeric(std::string name, std::vector<double> values);

enum : std::uint8_t { kNormal = 0, kAttack = 1 };

// Immutable column-typed table with a binary label sequence. Row order is
// significant (temporal order for the sensitivity-factor transform).
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Column> columns, std::string label_name,
            std::vector<std::uint8_t> labels);

    std::size_t rows() const noexcept { return labels_.size(); }
    std::size_t column_count() const noexcept { return columns_.size(); }

    const Column& column(std::size_t index) const { return columns_.at(index); }
    const Column& column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;
    const std::vector<Column>& columns() const noexcept { return columns_; }

    // Non-label columns followed by the label column.
    std::vector<ColumnSchema> schema() const;

    // Indices of columns usable as model inputs (numeric or categorical).
    std::vector<std::size_t> feature_columns() const;
    std::vector<std::string> feature_names() const;

    const std::string& label_name() const noexcept { return label_name_; }
    const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }
    std::size_t attack_count() const noexcept;

    Dataset select_rows(std::span<const std::size_t> rows) const;
    // Same labels, different columns.
    Dataset with_columns(std::vector<Column> columns) const;

private:
    std::vector<Column> columns_;
    std::string label_name_;
    std::vector<std::uint8_t> labels_;
};

// Strings that map to label 0 and 1 in the label column.
struct LabelMapping {
    std::string normal = "0";
    std::string attack = "1";
};

Dataset load_csv(const std::filesystem::path& path, std::span<const ColumnSchema> schema,
                 const LabelMapping& mapping = {});
Dataset read_csv(std::istream& in, std::span<const ColumnSchema> schema,
                 const LabelMapping& mapping = {});

// Writes the dataset in the dialect read_csv accepts, label column last.
void write_csv(std::ostream& out, const Dataset& d, const LabelMapping& mapping = {});

Dataset drop_identifiers(const Dataset& d);
Dataset encode_categories(const Dataset& d);

struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    bool contiguous = false;  // block CV, used when SF is enabled
    std::vector<std::size_t> assignments;

    std::vector<std::size_t> test_rows(std::size_t fold) const;
    std::vector<std::size_t> train_rows(std::size_t fold) const;
    std::size_t fold_size(std::size_t fold) const;
};

// Stratified shuffled folds: attack-count and size per fold differ from the
// global share by at most one row.
FoldPlan split_folds(const Dataset& d, std::size_t k, std::uint64_t seed);
// Contiguous row blocks, preserving temporal order inside each fold.
FoldPlan split_blocks(const Dataset& d, std::size_t k);

}  // namespace lemda
