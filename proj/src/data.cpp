#include "spreadscope/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "spreadscope/error.hpp"
#include "spreadscope/text.hpp"

namespace spreadscope {

namespace {

constexpr std::size_t idx(Tenor t) { return static_cast<std::size_t>(t); }

bool is_month_unit(Tenor t) { return t == Tenor::M3 || t == Tenor::M6; }

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

bool is_date_header(std::string_view h) {
    const auto u = upper(h);
    return u == "DATE" || u == "OBSERVATION_DATE";
}

bool is_missing(std::string_view field) { return field.empty() || field == "."; }

std::string month_list(const std::vector<YearMonth>& months, std::size_t limit = 12) {
    std::string out;
    for (std::size_t i = 0; i < months.size() && i < limit; ++i) {
        if (i) out += ", ";
        out += months[i].str();
    }
    if (months.size() > limit) out += fmt::format(" ... ({} total)", months.size());
    return out;
}

YearMonth parse_row_date(std::string_view field, std::size_t row) {
    try {
        return YearMonth::parse(field);
    } catch (const std::invalid_argument& e) {
        throw ParseError(fmt::format("row {}: {}", row, e.what()));
    }
}

/// Sum of values after sorting, so that the result is independent of the
/// order the values were supplied in.
double ordered_sum(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

int maturity_months(Tenor t) {
    static constexpr std::array<int, kTenorCount> months = {3, 6, 12, 24, 36, 60, 84, 120, 240};
    return months[idx(t)];
}

std::string_view tenor_name(Tenor t) {
    static constexpr std::array<std::string_view, kTenorCount> names = {
        "M3", "M6", "Y1", "Y2", "Y3", "Y5", "Y7", "Y10", "Y20"};
    return names[idx(t)];
}

std::optional<Tenor> tenor_from_series(std::string_view header) {
    static const std::map<std::string, Tenor> aliases = {
        {"M3", Tenor::M3},     {"GS3M", Tenor::M3},   {"TB3MS", Tenor::M3},  {"DGS3MO", Tenor::M3},
        {"M6", Tenor::M6},     {"GS6M", Tenor::M6},   {"TB6MS", Tenor::M6},  {"DGS6MO", Tenor::M6},
        {"Y1", Tenor::Y1},     {"GS1", Tenor::Y1},    {"DGS1", Tenor::Y1},
        {"Y2", Tenor::Y2},     {"GS2", Tenor::Y2},    {"DGS2", Tenor::Y2},
        {"Y3", Tenor::Y3},     {"GS3", Tenor::Y3},    {"DGS3", Tenor::Y3},
        {"Y5", Tenor::Y5},     {"GS5", Tenor::Y5},    {"DGS5", Tenor::Y5},
        {"Y7", Tenor::Y7},     {"GS7", Tenor::Y7},    {"DGS7", Tenor::Y7},
        {"Y10", Tenor::Y10},   {"GS10", Tenor::Y10},  {"DGS10", Tenor::Y10},
        {"Y20", Tenor::Y20},   {"GS20", Tenor::Y20},  {"DGS20", Tenor::Y20},
    };
    const auto it = aliases.find(upper(text::trim(header)));
    if (it == aliases.end()) return std::nullopt;
    return it->second;
}

std::string SpreadId::name() const {
    return fmt::format("{}-{}", tenor_name(first), tenor_name(second));
}

const std::array<SpreadId, kSpreadCount>& spread_ids() {
    static const auto ids = [] {
        std::vector<SpreadId> v;
        for (std::size_t a = 0; a < kTenorCount; ++a) {
            for (std::size_t b = a + 1; b < kTenorCount; ++b) {
                const Tenor shorter = kTenors[a];
                const Tenor longer = kTenors[b];
                if (is_month_unit(shorter) == is_month_unit(longer)) {
                    v.push_back({shorter, longer});
                } else {
                    v.push_back({longer, shorter});
                }
            }
        }
        std::sort(v.begin(), v.end(), [](const SpreadId& l, const SpreadId& r) {
            return std::pair(maturity_months(l.first), maturity_months(l.second)) <
                   std::pair(maturity_months(r.first), maturity_months(r.second));
        });
        std::array<SpreadId, kSpreadCount> out{};
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }();
    return ids;
}

const std::vector<std::string>& spread_names() {
    static const auto names = [] {
        std::vector<std::string> v;
        for (const auto& id : spread_ids()) v.push_back(id.name());
        return v;
    }();
    return names;
}

std::optional<std::size_t> spread_index(std::string_view name) {
    const auto& names = spread_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

ParsedPanel parse_yield_csv(std::istream& in) {
    std::string line;
    if (!text::next_line(in, line)) throw ParseError("empty yield CSV");

    const auto header = text::split_fields(line);
    std::optional<std::size_t> date_col;
    std::array<std::optional<std::size_t>, kTenorCount> tenor_col{};
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (is_date_header(header[c])) {
            date_col = c;
            continue;
        }
        if (auto t = tenor_from_series(header[c])) {
            if (tenor_col[idx(*t)]) {
                throw ParseError(fmt::format("header: tenor {} appears twice", tenor_name(*t)));
            }
            tenor_col[idx(*t)] = c;
        }
    }
    if (!date_col) throw ParseError("header: no DATE column");
    for (Tenor t : kTenors) {
        if (!tenor_col[idx(t)]) {
            throw ParseError(fmt::format("header: no column for tenor {}", tenor_name(t)));
        }
    }

    ParsedPanel out;
    std::optional<YearMonth> previous;
    std::size_t row = 1;
    std::array<double, kTenorCount> rates{};
    while (text::next_line(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError(fmt::format("row {}: expected {} fields, found {}", row, header.size(),
                                         fields.size()));
        }
        const YearMonth month = parse_row_date(fields[*date_col], row);
        if (previous) {
            if (month == *previous) {
                throw ParseError(fmt::format("row {}: duplicate month {}", row, month.str()));
            }
            if (month < *previous) {
                throw ParseError(fmt::format("row {}: month {} out of order (after {})", row,
                                             month.str(), previous->str()));
            }
            if (month.ordinal() != previous->ordinal() + 1) {
                throw ParseError(fmt::format("row {}: gap before {} (previous {})", row,
                                             month.str(), previous->str()));
            }
        }
        previous = month;

        bool missing = false;
        for (Tenor t : kTenors) {
            const auto field = fields[*tenor_col[idx(t)]];
            if (is_missing(field)) {
                missing = true;
                continue;
            }
            const auto value = text::parse_double(field);
            if (!value) {
                throw ParseError(fmt::format("row {}: non-numeric rate '{}' for {}", row, field,
                                             tenor_name(t)));
            }
            if (*value < 0) {
                throw ParseError(fmt::format("row {}: negative rate {} for {}", row, field,
                                             tenor_name(t)));
            }
            rates[idx(t)] = *value;
        }
        if (missing) {
            out.rejected.push_back(month);
        } else {
            out.panel.dates.push_back(month);
            out.panel.rates.append_row(rates);
        }
    }
    if (out.panel.dates.empty()) throw ParseError("yield CSV contains no complete months");
    return out;
}

ParsedPanel merge_series_csv(std::span<const std::pair<Tenor, std::string>> series) {
    std::map<int, std::array<std::optional<double>, kTenorCount>> by_month;
    std::array<bool, kTenorCount> seen{};
    for (const auto& [tenor, body] : series) {
        if (seen[idx(tenor)]) {
            throw ParseError(fmt::format("series for {} supplied twice", tenor_name(tenor)));
        }
        seen[idx(tenor)] = true;
        std::istringstream in(body);
        std::string line;
        if (!text::next_line(in, line)) {
            throw ParseError(fmt::format("{}: empty series", tenor_name(tenor)));
        }
        const auto header = text::split_fields(line);
        if (header.size() != 2 || !is_date_header(header[0])) {
            throw ParseError(fmt::format("{}: expected header DATE,<value>", tenor_name(tenor)));
        }
        std::size_t row = 1;
        std::optional<YearMonth> previous;
        while (text::next_line(in, line)) {
            ++row;
            if (text::trim(line).empty()) continue;
            const auto fields = text::split_fields(line);
            if (fields.size() != 2) {
                throw ParseError(fmt::format("{} row {}: expected 2 fields", tenor_name(tenor), row));
            }
            const YearMonth month = parse_row_date(fields[0], row);
            if (previous && month <= *previous) {
                throw ParseError(fmt::format("{} row {}: month {} duplicate or out of order",
                                             tenor_name(tenor), row, month.str()));
            }
            previous = month;
            auto& slot = by_month[month.ordinal()];
            if (is_missing(fields[1])) continue;
            const auto value = text::parse_double(fields[1]);
            if (!value || *value < 0) {
                throw ParseError(fmt::format("{} row {}: invalid rate '{}'", tenor_name(tenor), row,
                                             fields[1]));
            }
            slot[idx(tenor)] = *value;
        }
    }
    for (Tenor t : kTenors) {
        if (!seen[idx(t)]) throw ParseError(fmt::format("no series for tenor {}", tenor_name(t)));
    }
    if (by_month.empty()) throw ParseError("series contain no observations");

    ParsedPanel out;
    const int first = by_month.begin()->first;
    const int last = by_month.rbegin()->first;
    std::array<double, kTenorCount> rates{};
    for (int o = first; o <= last; ++o) {
        const auto it = by_month.find(o);
        bool complete = it != by_month.end();
        if (complete) {
            for (std::size_t k = 0; k < kTenorCount; ++k) {
                if (!it->second[k]) {
                    complete = false;
                    break;
                }
                rates[k] = *it->second[k];
            }
        }
        if (complete) {
            out.panel.dates.push_back(YearMonth::from_ordinal(o));
            out.panel.rates.append_row(rates);
        } else {
            out.rejected.push_back(YearMonth::from_ordinal(o));
        }
    }
    return out;
}

Matrix compute_spreads(const YieldPanel& panel) {
    const auto& ids = spread_ids();
    Matrix out(panel.dates.size(), kSpreadCount);
    for (std::size_t r = 0; r < panel.dates.size(); ++r) {
        const auto rates = panel.rates.row(r);
        for (std::size_t k = 0; k < kSpreadCount; ++k) {
            out(r, k) = rates[idx(ids[k].first)] - rates[idx(ids[k].second)];
        }
    }
    return out;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count(target.begin(), target.end(), 1));
}

double Dataset::positive_share() const {
    return target.empty() ? 0.0 : static_cast<double>(positives()) / static_cast<double>(size());
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.feature_names = feature_names;
    out.features = features.select_rows(rows);
    for (auto r : rows) {
        out.dates.push_back(dates[r]);
        out.target.push_back(target[r]);
    }
    return out;
}

Dataset attach_target(std::vector<YearMonth> dates, Matrix features, std::istream& recession_csv) {
    if (dates.size() != features.rows()) {
        throw AlignmentError(fmt::format("{} dates for {} feature rows", dates.size(), features.rows()));
    }
    std::string line;
    if (!text::next_line(recession_csv, line)) throw AlignmentError("empty recession CSV");
    const auto header = text::split_fields(line);
    if (header.size() != 2 || !is_date_header(header[0])) {
        throw AlignmentError("recession CSV: expected header DATE,<flag>");
    }
    std::map<int, int> flags;
    std::size_t row = 1;
    while (text::next_line(recession_csv, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split_fields(line);
        if (fields.size() != 2) throw AlignmentError(fmt::format("recession row {}: expected 2 fields", row));
        YearMonth month;
        try {
            month = YearMonth::parse(fields[0]);
        } catch (const std::invalid_argument& e) {
            throw AlignmentError(fmt::format("recession row {}: {}", row, e.what()));
        }
        const auto value = text::parse_double(fields[1]);
        if (!value || (*value != 0.0 && *value != 1.0)) {
            throw AlignmentError(fmt::format("recession row {} ({}): flag '{}' is not 0 or 1", row,
                                             month.str(), fields[1]));
        }
        if (!flags.emplace(month.ordinal(), static_cast<int>(*value)).second) {
            throw AlignmentError(fmt::format("recession row {}: duplicate month {}", row, month.str()));
        }
    }

    Dataset ds;
    std::vector<YearMonth> missing;
    for (const auto& d : dates) {
        const auto it = flags.find(d.ordinal());
        if (it == flags.end()) {
            missing.push_back(d);
        } else {
            ds.target.push_back(it->second);
        }
    }
    if (!missing.empty()) {
        throw AlignmentError("recession series does not cover months: " + month_list(missing));
    }
    ds.dates = std::move(dates);
    ds.features = std::move(features);
    ds.feature_names = spread_names();
    if (ds.features.cols() != ds.feature_names.size()) {
        ds.feature_names.clear();
        for (std::size_t c = 0; c < ds.features.cols(); ++c) ds.feature_names.push_back(fmt::format("x{}", c));
    }
    return ds;
}

SplitResult temporal_split(const Dataset& ds, MonthWindow train, MonthWindow test) {
    if (train.last < train.first || test.last < test.first) {
        throw SplitError("split window ends before it starts");
    }
    if (!(train.last < test.first)) {
        throw SplitError(fmt::format("train window {}..{} must end before test window {}..{}",
                                     train.first.str(), train.last.str(), test.first.str(),
                                     test.last.str()));
    }
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (train.contains(ds.dates[i])) train_rows.push_back(i);
        else if (test.contains(ds.dates[i])) test_rows.push_back(i);
    }
    if (train_rows.empty()) throw SplitError("train window selects no rows");
    if (test_rows.empty()) throw SplitError("test window selects no rows");
    SplitResult out;
    out.train = ds.subset(train_rows);
    out.test = ds.subset(test_rows);
    out.excluded = ds.size() - train_rows.size() - test_rows.size();
    return out;
}

const ColumnStats* StatsTable::find(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return &columns[i];
    }
    return nullptr;
}

StatsTable descriptive_stats(const Matrix& features, std::span<const std::string> names) {
    const std::size_t n = features.rows();
    if (n < 2) throw Error("descriptive statistics need at least 2 rows");
    StatsTable out;
    out.names.assign(names.begin(), names.end());
    for (std::size_t c = 0; c < features.cols(); ++c) {
        auto v = features.column(c);
        ColumnStats s;
        s.mean = ordered_sum(v) / static_cast<double>(n);  // v is sorted from here on
        s.min = v.front();
        s.max = v.back();
        s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
        s.sd = std::sqrt(ordered_sum(sq) / static_cast<double>(n - 1));
        out.columns.push_back(s);
    }
    return out;
}

CorrMatrix pearson_correlations(const Matrix& features, std::span<const std::string> names) {
    const std::size_t n = features.rows();
    const std::size_t p = features.cols();
    if (n < 2) throw CorrelationError("correlation needs at least 2 rows");

    std::vector<std::vector<double>> centered(p);
    std::vector<double> norm(p);
    for (std::size_t c = 0; c < p; ++c) {
        auto col = features.column(c);
        auto sorted = col;
        const double mean = ordered_sum(sorted) / static_cast<double>(n);
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) {
            col[i] -= mean;
            sq[i] = col[i] * col[i];
        }
        norm[c] = ordered_sum(sq);
        if (norm[c] == 0.0) {
            throw CorrelationError(fmt::format("column {} has zero variance",
                                               c < names.size() ? names[c] : std::to_string(c)));
        }
        centered[c] = std::move(col);
    }

    CorrMatrix out;
    out.names.assign(names.begin(), names.end());
    out.coefficients = Matrix(p, p);
    std::vector<double> prod(n);
    for (std::size_t a = 0; a < p; ++a) {
        out.coefficients(a, a) = 1.0;
        for (std::size_t b = a + 1; b < p; ++b) {
            for (std::size_t i = 0; i < n; ++i) prod[i] = centered[a][i] * centered[b][i];
            const double r = std::clamp(ordered_sum(prod) / std::sqrt(norm[a] * norm[b]), -1.0, 1.0);
            out.coefficients(a, b) = r;
            out.coefficients(b, a) = r;
        }
    }
    for (std::size_t a = 0; a < p; ++a) {
        CorrPartner best{a == 0 ? std::size_t{1} : std::size_t{0}, 0.0};
        double best_abs = -1.0;
        for (std::size_t b = 0; b < p; ++b) {
            if (b == a) continue;
            const double r = out.coefficients(a, b);
            if (std::abs(r) > best_abs) {
                best_abs = std::abs(r);
                best = {b, r};
            }
        }
        out.most_correlated.push_back(best);
    }
    return out;
}

void write_stats_csv(std::ostream& out, const StatsTable& stats) {
    out << "feature,mean,median,min,max,sd\n";
    for (std::size_t i = 0; i < stats.names.size(); ++i) {
        const auto& s = stats.columns[i];
        out << stats.names[i] << ',' << text::fixed(s.mean, 6) << ',' << text::fixed(s.median, 6)
            << ',' << text::fixed(s.min, 6) << ',' << text::fixed(s.max, 6) << ','
            << text::fixed(s.sd, 6) << '\n';
    }
}

void write_corr_csv(std::ostream& out, const CorrMatrix& corr) {
    out << "feature";
    for (const auto& n : corr.names) out << ',' << n;
    out << '\n';
    for (std::size_t a = 0; a < corr.names.size(); ++a) {
        out << corr.names[a];
        for (std::size_t b = 0; b < corr.names.size(); ++b) {
            out << ',' << text::fixed(corr.coefficients(a, b), 6);
        }
        out << '\n';
    }
}

void write_partners_csv(std::ostream& out, const CorrMatrix& corr) {
    out << "feature,most_correlated,coefficient\n";
    for (std::size_t a = 0; a < corr.names.size(); ++a) {
        const auto& p = corr.most_correlated[a];
        out << corr.names[a] << ',' << corr.names[p.index] << ',' << text::fixed(p.coefficient, 6)
            << '\n';
    }
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
    out << "DATE";
    for (const auto& n : ds.feature_names) out << ',' << n;
    out << ",USREC\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        out << ds.dates[r].str();
        for (double v : ds.features.row(r)) out << ',' << text::number(v);
        out << ',' << ds.target[r] << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!text::next_line(in, line)) throw ParseError("empty dataset CSV");
    const auto header = text::split_fields(line);
    if (header.size() < 3 || !is_date_header(header.front())) {
        throw ParseError("dataset CSV: expected DATE,<features...>,<target>");
    }
    Dataset ds;
    for (std::size_t c = 1; c + 1 < header.size(); ++c) ds.feature_names.emplace_back(header[c]);
    const std::size_t p = ds.feature_names.size();
    ds.features = Matrix(0, p);
    std::vector<double> values(p);
    std::size_t row = 1;
    while (text::next_line(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError(fmt::format("dataset row {}: expected {} fields", row, header.size()));
        }
        ds.dates.push_back(parse_row_date(fields[0], row));
        for (std::size_t c = 0; c < p; ++c) {
            const auto v = text::parse_double(fields[c + 1]);
            if (!v) throw ParseError(fmt::format("dataset row {}: bad value '{}'", row, fields[c + 1]));
            values[c] = *v;
        }
        const auto t = text::parse_double(fields.back());
        if (!t || (*t != 0.0 && *t != 1.0)) {
            throw ParseError(fmt::format("dataset row {}: target must be 0 or 1", row));
        }
        ds.features.append_row(values);
        ds.target.push_back(static_cast<int>(*t));
    }
    return ds;
}

}  // namespace spreadscope
