#pragma once

#include <filesystem>
#include <string>

namespace spreadscope {

/// Default FRED CSV download endpoint; the series id is sent as `?id=`.
inline constexpr const char* kFredEndpoint = "https://fred.stlouisfed.org/graph/fredgraph.csv";

/// Returns the body of `<cache_dir>/<series_id>.csv` when present. Otherwise
/// downloads `<endpoint>?id=<series_id>`, stores it in the cache and returns
/// it. Throws FetchError on network failure or a non-200 status.
std::string fetch_series(const std::string& series_id, const std::string& endpoint,
                         const std::filesystem::path& cache_dir);

}  // namespace spreadscope
