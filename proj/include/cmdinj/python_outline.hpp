#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cmdinj::python {

enum class ArgShape { StringLiteral, FormattedString, NameRef, ListLiteral, Other, Missing };

/// Where the name passed as a call's command argument is bound.
enum class ArgOrigin { NotAName, Local, Parameter, ListParameter, ModuleGlobal, Unknown };

std::string_view to_string(ArgShape shape);
std::string_view to_string(ArgOrigin origin);
std::optional<ArgShape> arg_shape_from_string(std::string_view s);
std::optional<ArgOrigin> arg_origin_from_string(std::string_view s);

struct Parameter {
    std::string name;
    std::string annotation;  // source text, empty when absent
    bool list_typed = false;
};

struct FunctionDef {
    std::string name;
    std::string qualname;    // Outer.inner style, "<locals>" omitted
    int def_line = 0;        // line of the `def` keyword (decorators excluded)
    int end_line = 0;        // last line of the body
    int parent = -1;         // enclosing FunctionDef index, -1 when none
    bool is_method = false;
    std::vector<Parameter> params;
    std::set<std::string> locals;
    std::set<std::string> declared_globals;
};

struct CallSite {
    std::string callee;      // dotted chain as written, e.g. "sp.run"
    int line = 0;            // line of the callee head token
    int stmt_start_line = 0;
    int stmt_end_line = 0;
    int scope = -1;          // innermost enclosing FunctionDef index, -1 at module level
    ArgShape command_shape = ArgShape::Missing;
    std::string command_name;  // set when command_shape == NameRef
    ArgOrigin command_origin = ArgOrigin::NotAName;
    bool shell_true_literal = false;
};

struct ImportBinding {
    std::string local;   // name bound in the module namespace
    std::string target;  // fully qualified origin ("subprocess", "subprocess.run", ".pkg.mod")
    int line = 0;
};

struct ModuleOutline {
    std::vector<FunctionDef> functions;
    std::vector<CallSite> calls;
    std::vector<ImportBinding> imports;
    std::vector<std::string> star_imports;   // modules imported with `from M import *`
    std::set<std::string> module_bindings;   // names assigned/defined at module level
};

/// Builds the structural outline of a module. Throws Error{SyntaxError} when
/// the source cannot be tokenized.
ModuleOutline outline_module(std::string_view source);

/// textwrap.dedent equivalent: strips the common leading whitespace.
std::string dedent(std::string_view text);

}  // namespace cmdinj::python
