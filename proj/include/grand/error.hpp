#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace grand {

// Base of every error the library raises. Subclasses carry the structured
// detail callers branch on (line numbers, offending IRIs).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line_no, const std::string& reason);
    std::size_t line() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class DimMismatch : public Error {
public:
    DimMismatch(std::size_t expected, std::size_t actual);
    DimMismatch(std::size_t line_no, std::size_t expected, std::size_t actual);
    std::optional<std::size_t> line() const noexcept { return line_no_; }

private:
    std::optional<std::size_t> line_no_;
};

class UnknownEntity : public Error {
public:
    explicit UnknownEntity(std::size_t id);
};

class NotClassicWalk : public Error {
public:
    using Error::Error;
};

class TokenNotInGraph : public Error {
public:
    explicit TokenNotInGraph(const std::string& token);
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("corpus yields an empty vocabulary") {}
};

class NonFiniteUpdate : public Error {
public:
    using Error::Error;
};

class DegenerateInput : public Error {
public:
    using Error::Error;
};

class MissingFeature : public Error {
public:
    explicit MissingFeature(const std::string& iri);
};

class EmptyTrainSet : public Error {
public:
    EmptyTrainSet() : Error("training set is empty") {}
};

class InconsistentHierarchy : public Error {
public:
    using Error::Error;
};

class CyclicHierarchy : public Error {
public:
    explicit CyclicHierarchy(const std::string& cls);
};

class UnknownClass : public Error {
public:
    UnknownClass(const std::string& iri, const std::string& cls);
};

class OverlapSplit : public Error {
public:
    explicit OverlapSplit(const std::string& iri);
};

class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what);
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace grand
