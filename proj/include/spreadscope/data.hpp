#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spreadscope/matrix.hpp"
#include "spreadscope/month.hpp"

namespace spreadscope {

/// The nine constant-maturity tenors, in maturity order.
enum class Tenor : std::uint8_t { M3, M6, Y1, Y2, Y3, Y5, Y7, Y10, Y20 };

inline constexpr std::size_t kTenorCount = 9;
inline constexpr std::size_t kSpreadCount = 36;

inline constexpr std::array<Tenor, kTenorCount> kTenors = {
    Tenor::M3, Tenor::M6, Tenor::Y1, Tenor::Y2, Tenor::Y3,
    Tenor::Y5, Tenor::Y7, Tenor::Y10, Tenor::Y20};

int maturity_months(Tenor t);
std::string_view tenor_name(Tenor t);

/// Maps a column header to a tenor. Understands the short names (M3, Y10),
/// monthly FRED ids (GS3M, TB3MS, TB6MS, GS1 ... GS20) and daily ids (DGS3MO ...).
std::optional<Tenor> tenor_from_series(std::string_view header);

/// A term spread rate(first) - rate(second). Within one unit the shorter
/// tenor is listed first (Y1-Y10); across units the year tenor is (Y3-M3).
struct SpreadId {
    Tenor first;
    Tenor second;

    std::string name() const;
    friend bool operator==(const SpreadId&, const SpreadId&) = default;
};

/// All 36 spreads ordered by (months(first), months(second)).
const std::array<SpreadId, kSpreadCount>& spread_ids();
const std::vector<std::string>& spread_names();
/// Column index of a spread name, or nullopt.
std::optional<std::size_t> spread_index(std::string_view name);

struct YieldPanel {
    std::vector<YearMonth> dates;
    Matrix rates;  // n x 9, columns in kTenors order, annualized percent
};

struct ParsedPanel {
    YieldPanel panel;
    std::vector<YearMonth> rejected;  // months dropped for a missing tenor
};

/// Wide CSV: a DATE column plus one column per tenor (any order, extra
/// columns ignored). Missing cells are "." or empty; such months are
/// dropped and reported. Input months must be consecutive.
ParsedPanel parse_yield_csv(std::istream& in);

/// Joins per-series FRED files (`DATE,<id>` or `DATE,value`) keyed by the
/// tenor they carry; months absent from any series are rejected.
ParsedPanel merge_series_csv(std::span<const std::pair<Tenor, std::string>> series);

Matrix compute_spreads(const YieldPanel& panel);

struct Dataset {
    std::vector<YearMonth> dates;
    Matrix features;  // n x 36
    std::vector<int> target;
    std::vector<std::string> feature_names;

    std::size_t size() const { return dates.size(); }
    std::size_t positives() const;
    double positive_share() const;
    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Aligns a `DATE,USREC` series onto the feature months.
Dataset attach_target(std::vector<YearMonth> dates, Matrix features, std::istream& recession_csv);

struct SplitResult {
    Dataset train;
    Dataset test;
    std::size_t excluded = 0;
};

SplitResult temporal_split(const Dataset& ds, MonthWindow train, MonthWindow test);

struct ColumnStats {
    double mean = 0;
    double median = 0;
    double min = 0;
    double max = 0;
    double sd = 0;  // n - 1 denominator
};

struct StatsTable {
    std::vector<std::string> names;
    std::vector<ColumnStats> columns;

    const ColumnStats* find(std::string_view name) const;
};

StatsTable descriptive_stats(const Matrix& features, std::span<const std::string> names);

struct CorrPartner {
    std::size_t index = 0;
    double coefficient = 0;
};

struct CorrMatrix {
    std::vector<std::string> names;
    Matrix coefficients;
    std::vector<CorrPartner> most_correlated;
};

/// Pearson coefficients. Sums are taken over sorted terms so the result
/// does not depend on row order.
CorrMatrix pearson_correlations(const Matrix& features, std::span<const std::string> names);

void write_stats_csv(std::ostream& out, const StatsTable& stats);
void write_corr_csv(std::ostream& out, const CorrMatrix& corr);
void write_partners_csv(std::ostream& out, const CorrMatrix& corr);
void write_dataset_csv(std::ostream& out, const Dataset& ds);
Dataset read_dataset_csv(std::istream& in);

}  // namespace spreadscope
