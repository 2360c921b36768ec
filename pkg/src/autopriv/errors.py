"""Exception hierarchy shared by every subsystem."""


class AutoprivError(Exception):
    """Base class for all errors raised by this package."""


# -- data model ---------------------------------------------------------------

class InvalidItem(AutoprivError):
    """A data item violates its structural invariants."""


class InvalidParam(AutoprivError):
    """A mechanism or operation parameter is out of its valid range."""


class CatalogError(AutoprivError):
    """Reference to a data type or PET that is not in the catalog/registry."""


# -- manifests ----------------------------------------------------------------

class ManifestSyntaxError(AutoprivError):
    """Manifest document is not well-formed."""


class SchemaError(AutoprivError):
    """Document parses but does not match the closed schema."""


# -- policies and purpose-bound encryption ------------------------------------

class PolicyParseError(AutoprivError):
    """Purpose policy text does not match the policy grammar."""


class PolicyNotSatisfied(AutoprivError):
    """Key attributes do not satisfy the ciphertext policy."""


class IntegrityError(AutoprivError):
    """Ciphertext or key material failed authentication."""


class WeakSecret(AutoprivError):
    """Keyed pseudonymization secret is too short."""


class EmptyAttributes(AutoprivError):
    """Attribute key requested for an empty attribute set."""


# -- selection engine ----------------------------------------------------------

class RuleFileError(AutoprivError):
    """Relevance rule file missing, empty, or malformed."""


class UnknownPet(AutoprivError):
    """PET id missing from the maturity registry."""


# -- privacy manager ----------------------------------------------------------

class NoViablePet(AutoprivError):
    """No overlap between app-supported PETs and selected candidates."""


class DeniedByPolicy(AutoprivError):
    """Requested access mode is denied for this data classification."""


class StaleData(AutoprivError):
    """No data item fresh enough to satisfy the rule's staleness bound."""


class RateLimited(AutoprivError):
    """Request exceeds the rule's disclosure rate."""


class PipelineError(AutoprivError):
    """PET pipeline is malformed or a stage cannot be applied."""


# -- databus ------------------------------------------------------------------

class TypeMismatch(AutoprivError):
    """Item published to a topic of a different data type."""


class OrderViolation(AutoprivError):
    """Item timestamp not strictly greater than the topic head."""


class UnknownTopic(AutoprivError):
    """Subscription or publish on a topic that does not exist."""


class TrajectoryParseError(AutoprivError):
    """Trajectory file cannot be parsed."""


class MonotonicityError(AutoprivError):
    """Trajectory timestamps are not strictly increasing."""


# -- uplink / storage ----------------------------------------------------------

class MissingItem(AutoprivError):
    """A stream is due but no source item is available."""


class TransportError(AutoprivError):
    """Endpoint unreachable or connection dropped."""


class ServerRejected(AutoprivError):
    """Storage server rejected the request (schema or auth)."""


class UnknownProvider(AutoprivError):
    """Query from a provider that is not registered."""


# -- location-based service ----------------------------------------------------

class UnknownCategory(AutoprivError):
    """POI query for a category absent from the store."""


class DegeneratePosterior(AutoprivError):
    """Bayes update produced an all-zero posterior."""


# -- demo service ---------------------------------------------------------------

class AlreadyInstalled(AutoprivError):
    """An app with the same id is already installed."""


class ScenarioError(AutoprivError):
    """Scenario configuration is incomplete or inconsistent."""
