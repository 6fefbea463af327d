#pragma once

#include <stdexcept>
#include <string>

namespace demandcast {

struct RangeError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct HistoryError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct IngestError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct NumericsError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct QuantileOrderError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct CategoryError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

struct LeakageError : std::logic_error {
	using std::logic_error::logic_error;
};

// Raised when a model fails on more than half of the series in a backtest.
struct ModelAbort : std::runtime_error {
	using std::runtime_error::runtime_error;
};

} // namespace demandcast
