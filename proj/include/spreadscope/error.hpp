#pragma once

#include <stdexcept>
#include <string>

namespace spreadscope {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class FetchError : public Error {
public:
    using Error::Error;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

class SplitError : public Error {
public:
    using Error::Error;
};

class CorrelationError : public Error {
public:
    using Error::Error;
};

class LiftError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class PredictError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or step while boosting.
class NumericError : public Error {
public:
    using Error::Error;
};

class ExplainError : public Error {
public:
    using Error::Error;
};

class LabelError : public Error {
public:
    using Error::Error;
};

class ModelFormatError : public Error {
public:
    using Error::Error;
};

}  // namespace spreadscope
