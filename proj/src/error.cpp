#include "grand/error.hpp"

namespace grand {

MalformedLine::MalformedLine(std::size_t line_no, const std::string& reason)
    : Error("malformed line " + std::to_string(line_no) + ": " + reason), line_no_(line_no) {}

DimMismatch::DimMismatch(std::size_t expected, std::size_t actual)
    : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
            std::to_string(actual)) {}

DimMismatch::DimMismatch(std::size_t line_no, std::size_t expected, std::size_t actual)
    : Error("dimension mismatch on line " + std::to_string(line_no) + ": expected " +
            std::to_string(expected) + ", got " + std::to_string(actual)),
      line_no_(line_no) {}

UnknownEntity::UnknownEntity(std::size_t id) : Error("unknown entity id " + std::to_string(id)) {}

TokenNotInGraph::TokenNotInGraph(const std::string& token)
    : Error("corpus token not present in graph: " + token) {}

MissingFeature::MissingFeature(const std::string& iri)
    : Error("no feature vector for " + iri) {}

CyclicHierarchy::CyclicHierarchy(const std::string& cls)
    : Error("class hierarchy has a cycle through " + cls) {}

UnknownClass::UnknownClass(const std::string& iri, const std::string& cls)
    : Error("entity " + iri + " labeled with unknown class " + cls) {}

OverlapSplit::OverlapSplit(const std::string& iri)
    : Error("entity appears in more than one split: " + iri) {}

StageError::StageError(const std::string& stage, const std::string& what)
    : Error("stage '" + stage + "' failed: " + what), stage_(stage) {}

}  // namespace grand
