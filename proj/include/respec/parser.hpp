#pragma once

#include <string>

#include "respec/formula.hpp"

namespace respec {

/// Parses a specification document: optional declaration lines followed by
/// one formula. Declarations, one per line:
///
///   let name = <expr>
///   events a, b
///   entities obj1, depot1
///
/// `#` starts a comment. Throws ParseError (Syntax, BoundsReversed, UnknownName).
SpecDocument parse_document(const std::string& text, const Schema& base = {});

/// Parses a bare formula against an existing schema.
SpecFormula parse_spec(const std::string& text, const Schema& schema = {});

Predicate parse_predicate(const std::string& text, const Schema& schema = {});
Expr parse_expression(const std::string& text, const Schema& schema = {});

/// Declarations first (aliases in definition order), then the formula.
std::string print_document(const SpecDocument& doc);

struct ParsedModification {
    ModificationCommand command;
    /// Declarations given on lines before the command; merged into the
    /// session schema when the modification is applied.
    Schema declarations;
};

/// Command forms:
///
///   add-conj <formula>
///   add-disj <formula>
///   set-bounds @<selector> [a,b]
///   set-pred @<selector> <predicate>
///   set-pred <predicate> := <predicate>
///   set-pred <expr> := <expr>
///   replace <formula>
ParsedModification parse_modification(const std::string& text, const Schema& schema = {});

} // namespace respec
