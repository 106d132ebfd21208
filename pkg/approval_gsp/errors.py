PARAMETER_ERROR = "Invalid election parameters: {}"

PARSE_ERROR = "{}:{}: {}"

CAP_ERROR = ("The requested space needs {} rule evaluations, above the evaluation cap of {}. "
             "Raise --eval-cap or switch to sampled mode (--mode sample:<count>:<seed>).")

CLAUSE_CAP_ERROR = "The CNF encoding would exceed the clause cap of {} clauses."

NOT_SINGLETON_ERROR = ("The base rule returned committee {} whose non-dummy part is not a singleton; "
                       "the rule is not Pareto-efficient on this input.")

TABLE_LOOKUP_ERROR = "Profile {} is outside the space of the rule table."

NODE_ERROR = "Node {} is not in the allowable set."

INCONSISTENT_ASSIGNMENT_ERROR = "Assignment selects {} outcomes for profile {} (expected exactly one)."


class ToolkitError(Exception):
    """Base class for every error the toolkit raises on purpose"""
    exit_code = 1


class ParameterError(ToolkitError):
    exit_code = 2

    def __init__(self, detail):
        super().__init__(PARAMETER_ERROR.format(detail))


class ParseError(ToolkitError):
    exit_code = 2

    def __init__(self, detail, source='<input>', line=0):
        self.detail = detail
        self.source = source
        self.line = line
        super().__init__(PARSE_ERROR.format(source, line, detail))


class ConfigError(ToolkitError):
    exit_code = 1


class CapExceededError(ToolkitError):
    exit_code = 3


class SearchTimeout(ToolkitError):
    exit_code = 4

    def __init__(self, stats):
        self.stats = stats
        super().__init__("Search budget exhausted after {} nodes".format(stats.get('nodes', 0)))


class NotSingletonError(ToolkitError):

    def __init__(self, committee, label=None):
        self.committee = committee
        super().__init__(NOT_SINGLETON_ERROR.format(label if label is not None else committee))


class InconsistentAssignmentError(ToolkitError):
    exit_code = 2


class TableLookupError(ToolkitError):
    pass


class NodeNotAllowableError(ToolkitError):
    exit_code = 2

    def __init__(self, node):
        self.node = node
        super().__init__(NODE_ERROR.format(node))


class VerificationError(ToolkitError):
    pass
