#pragma once

#include <cstdint>
#include <string>

#include "wfcast/series.hpp"

namespace wfcast {

/// Third-party exports disagree on header names and date layout, so both are
/// configurable. date_format: "auto" (ISO or d/m/Y by inspection), "iso"
/// (Y-M-D or Y/M/D), "dmy" (d/m/Y or d-m-Y), "mdy".
struct CsvOptions {
    std::string date_column = "date";
    std::string close_column = "close";
    std::string date_format = "auto";
    char delimiter = ',';
};

/**
 * Parses a headered CSV of daily observations into a PriceSeries. Only the
 * date and close columns are read; the rest are ignored. Rows are sorted by
 * date, dates are canonicalized to ISO, and any unparseable date or close,
 * duplicate date, or non-positive close is rejected with the offending row
 * numbers in the message.
 */
PriceSeries ingest_csv(const std::string& path, const CsvOptions& options = {});

/// Writes a two-column date,close CSV. ingest_csv of the output reproduces
/// the series exactly.
void write_price_csv(const std::string& path, const PriceSeries& series);

/// FNV-1a fingerprint of the canonical "date,close" stream; identifies the
/// ingested data independent of source formatting.
std::uint64_t fingerprint(const PriceSeries& series);

}  // namespace wfcast
