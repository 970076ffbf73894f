#include "lemda/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lemda/error.hpp"

namespace lemda {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// Reads one CSV record. Quoted fields may contain commas, doubled quotes and
// newlines. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (int c = in.get(); c != std::char_traits<char>::eof(); c = in.get()) {
        any = true;
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

bool needs_quotes(std::string_view s) {
    return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

void write_field(std::ostream& out, std::string_view s) {
    if (!needs_quotes(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

std::string format_real(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

class Interner {
public:
    explicit Interner(std::vector<std::string>& table) : table_(table) {
        for (std::size_t i = 0; i < table_.size(); ++i) index_.emplace(table_[i], i);
    }

    double code(std::string_view text) {
        auto it = index_.find(std::string(text));
        if (it != index_.end()) return static_cast<double>(it->second);
        const std::size_t code = table_.size();
        table_.emplace_back(text);
        index_.emplace(table_.back(), code);
        return static_cast<double>(code);
    }

private:
    std::vector<std::string>& table_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::label: return "label";
        case ColumnKind::identifier: return "identifier";
        case ColumnKind::timestamp: return "timestamp";
    }
    return "numeric";
}

ColumnKind parse_column_kind(std::string_view text) {
    text = trim(text);
    if (text == "numeric") return ColumnKind::numeric;
    if (text == "categorical") return ColumnKind::categorical;
    if (text == "label") return ColumnKind::label;
    if (text == "identifier") return ColumnKind::identifier;
    if (text == "timestamp") return ColumnKind::timestamp;
    throw SchemaError("unknown column kind '" + std::string(text) + "'");
}

void validate_schema(std::span<const ColumnSchema> schema) {
    std::unordered_set<std::string> seen;
    std::size_t labels = 0;
    for (const auto& c : schema) {
        if (c.name.empty()) throw SchemaError("column name must be non-empty");
        if (!seen.insert(c.name).second) throw SchemaError("duplicate column '" + c.name + "'");
        if (c.kind == ColumnKind::label) ++labels;
    }
    if (labels != 1) {
        throw SchemaError("schema must have exactly one label column, found " +
                          std::to_string(labels));
    }
}

std::vector<ColumnSchema> parse_schema(std::istream& in) {
    std::vector<ColumnSchema> schema;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.rfind('=');
        if (eq == std::string_view::npos) {
            throw SchemaError("schema line " + std::to_string(line_no) + ": expected name=kind");
        }
        schema.push_back({std::string(trim(view.substr(0, eq))),
                          parse_column_kind(view.substr(eq + 1))});
    }
    validate_schema(schema);
    return schema;
}

std::vector<ColumnSchema> read_schema_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file " + path.string());
    return parse_schema(in);
}

void write_schema(std::ostream& out, std::span<const ColumnSchema> schema) {
    for (const auto& c : schema) out << c.name << '=' << to_string(c.kind) << '\n';
}

const std::string& Column::text(std::size_t row) const {
    const auto code = static_cast<std::size_t>(values.at(row));
    return categories.at(code);
}

Column make_categorical(std::string name, std::span<const std::string> text, ColumnKind kind) {
    Column c{{std::move(name), kind}, {}, {}};
    Interner interner(c.categories);
    c.values.reserve(text.size());
    for (const auto& t : text) c.values.push_back(interner.code(t));
    return c;
}

Column make_numeric(std::string name, std::vector<double> values) {
    return Column{{std::move(name), ColumnKind::numeric}, std::move(values), {}};
}

Dataset::Dataset(std::vector<Column> columns, std::string label_name,
                 std::vector<std::uint8_t> labels)
    : columns_(std::move(columns)), label_name_(std::move(label_name)), labels_(std::move(labels)) {
    validate_schema(schema());
    for (const auto& c : columns_) {
        if (c.values.size() != labels_.size()) {
            throw SchemaError("column '" + c.name() + "' has " + std::to_string(c.values.size()) +
                              " rows, expected " + std::to_string(labels_.size()));
        }
        if (c.kind() != ColumnKind::numeric || c.has_code_table()) {
            for (double v : c.values) {
                if (v < 0 || static_cast<std::size_t>(v) >= c.categories.size() ||
                    v != static_cast<double>(static_cast<std::size_t>(v))) {
                    throw SchemaError("column '" + c.name() + "' has a code outside its table");
                }
            }
        }
    }
    for (auto l : labels_) {
        if (l > 1) throw LabelError("labels must be 0 or 1");
    }
}

const Column& Dataset::column(std::string_view name) const {
    if (auto i = find_column(name)) return columns_[*i];
    throw SchemaError("missing column '" + std::string(name) + "'");
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name() == name) return i;
    }
    return std::nullopt;
}

std::vector<ColumnSchema> Dataset::schema() const {
    std::vector<ColumnSchema> out;
    out.reserve(columns_.size() + 1);
    for (const auto& c : columns_) out.push_back(c.schema);
    out.push_back({label_name_, ColumnKind::label});
    return out;
}

std::vector<std::size_t> Dataset::feature_columns() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto k = columns_[i].kind();
        if (k == ColumnKind::numeric || k == ColumnKind::categorical) out.push_back(i);
    }
    return out;
}

std::vector<std::string> Dataset::feature_names() const {
    std::vector<std::string> out;
    for (auto i : feature_columns()) out.push_back(columns_[i].name());
    return out;
}

std::size_t Dataset::attack_count() const noexcept {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), kAttack));
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column sub{c.schema, {}, c.categories};
        sub.values.reserve(rows.size());
        for (auto r : rows) sub.values.push_back(c.values.at(r));
        cols.push_back(std::move(sub));
    }
    std::vector<std::uint8_t> labels;
    labels.reserve(rows.size());
    for (auto r : rows) labels.push_back(labels_.at(r));
    return Dataset(std::move(cols), label_name_, std::move(labels));
}

Dataset Dataset::with_columns(std::vector<Column> columns) const {
    return Dataset(std::move(columns), label_name_, labels_);
}

Dataset load_csv(const std::filesystem::path& path, std::span<const ColumnSchema> schema,
                 const LabelMapping& mapping) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open data file " + path.string());
    return read_csv(in, schema, mapping);
}

Dataset read_csv(std::istream& in, std::span<const ColumnSchema> schema,
                 const LabelMapping& mapping) {
    validate_schema(schema);
    std::vector<std::string> header;
    if (!read_record(in, header)) throw SchemaError("empty CSV input");
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
    for (auto& h : header) h = std::string(trim(h));

    // Map each schema column to its position in the header.
    std::vector<std::size_t> position(schema.size());
    for (std::size_t s = 0; s < schema.size(); ++s) {
        auto it = std::find(header.begin(), header.end(), schema[s].name);
        if (it == header.end()) throw SchemaError("missing column '" + schema[s].name + "'");
        position[s] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<Column> columns;
    std::vector<std::size_t> source;  // schema index for each entry in `columns`
    std::size_t label_pos = 0;
    std::string label_name;
    for (std::size_t s = 0; s < schema.size(); ++s) {
        if (schema[s].kind == ColumnKind::label) {
            label_pos = position[s];
            label_name = schema[s].name;
            continue;
        }
        columns.push_back(Column{schema[s], {}, {}});
        source.push_back(s);
    }
    std::vector<Interner> interners;
    interners.reserve(columns.size());
    for (auto& c : columns) interners.emplace_back(c.categories);

    std::vector<std::uint8_t> labels;
    std::vector<std::string> fields;
    std::size_t row = 0;
    while (read_record(in, fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
        ++row;
        if (fields.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + ": expected " +
                                 std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             row, "");
        }
        const auto label_text = trim(fields[label_pos]);
        if (label_text == mapping.normal) {
            labels.push_back(kNormal);
        } else if (label_text == mapping.attack) {
            labels.push_back(kAttack);
        } else {
            throw LabelError("row " + std::to_string(row) + ": unknown label '" +
                             std::string(label_text) + "' in column '" + label_name + "'");
        }
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto cell = trim(fields[position[source[c]]]);
            if (columns[c].kind() == ColumnKind::numeric) {
                double v = 0;
                const auto* first = cell.data();
                const auto* last = cell.data() + cell.size();
                if (!cell.empty() && *first == '+') ++first;
                auto [ptr, ec] = std::from_chars(first, last, v);
                if (cell.empty() || ec != std::errc{} || ptr != last) {
                    throw ParseError("row " + std::to_string(row) + ", column '" +
                                         columns[c].name() + "': cannot parse '" +
                                         std::string(cell) + "' as a number",
                                     row, columns[c].name());
                }
                columns[c].values.push_back(v);
            } else {
                columns[c].values.push_back(interners[c].code(cell));
            }
        }
    }
    return Dataset(std::move(columns), std::move(label_name), std::move(labels));
}

void write_csv(std::ostream& out, const Dataset& d, const LabelMapping& mapping) {
    const auto& cols = d.columns();
    for (const auto& c : cols) {
        write_field(out, c.name());
        out << ',';
    }
    write_field(out, d.label_name());
    out << '\n';
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (const auto& c : cols) {
            if (c.kind() == ColumnKind::numeric && !c.has_code_table()) {
                out << format_real(c.values[r]);
            } else if (c.kind() == ColumnKind::numeric) {
                // Encoded categorical: emit the code, which is what models see.
                out << format_real(c.values[r]);
            } else {
                write_field(out, c.text(r));
            }
            out << ',';
        }
        write_field(out, d.labels()[r] == kAttack ? mapping.attack : mapping.normal);
        out << '\n';
    }
}

Dataset drop_identifiers(const Dataset& d) {
    std::vector<Column> kept;
    for (const auto& c : d.columns()) {
        if (c.kind() != ColumnKind::identifier) kept.push_back(c);
    }
    return d.with_columns(std::move(kept));
}

Dataset encode_categories(const Dataset& d) {
    std::vector<Column> cols = d.columns();
    for (auto& c : cols) {
        if (c.kind() == ColumnKind::categorical) c.schema.kind = ColumnKind::numeric;
    }
    return d.with_columns(std::move(cols));
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < assignments.size(); ++r) {
        if (assignments[r] == fold) out.push_back(r);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < assignments.size(); ++r) {
        if (assignments[r] != fold) out.push_back(r);
    }
    return out;
}

std::size_t FoldPlan::fold_size(std::size_t fold) const {
    return static_cast<std::size_t>(std::count(assignments.begin(), assignments.end(), fold));
}

FoldPlan split_folds(const Dataset& d, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError("k must be at least 2");
    if (k > d.rows()) {
        throw ArgumentError("k=" + std::to_string(k) + " exceeds row count " +
                            std::to_string(d.rows()));
    }
    std::vector<std::size_t> attacks;
    std::vector<std::size_t> normals;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        (d.labels()[r] == kAttack ? attacks : normals).push_back(r);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(attacks.begin(), attacks.end(), rng);
    std::shuffle(normals.begin(), normals.end(), rng);

    // Deal attacks then normals round-robin; continuing the cursor across
    // classes keeps both fold sizes and per-fold attack counts within one.
    FoldPlan plan{k, seed, false, std::vector<std::size_t>(d.rows())};
    std::size_t cursor = 0;
    for (auto r : attacks) plan.assignments[r] = cursor++ % k;
    for (auto r : normals) plan.assignments[r] = cursor++ % k;
    return plan;
}

FoldPlan split_blocks(const Dataset& d, std::size_t k) {
    if (k < 2) throw ArgumentError("k must be at least 2");
    if (k > d.rows()) {
        throw ArgumentError("k=" + std::to_string(k) + " exceeds row count " +
                            std::to_string(d.rows()));
    }
    FoldPlan plan{k, 0, true, std::vector<std::size_t>(d.rows())};
    const std::size_t n = d.rows();
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t begin = f * n / k;
        const std::size_t end = (f + 1) * n / k;
        for (std::size_t r = begin; r < end; ++r) plan.assignments[r] = f;
    }
    return plan;
}

}  // namespace lemda
