#include "cdt/error.hpp"

namespace cdt {

const char* errc_name(errc code) {
    switch (code) {
    case errc::empty_keyword_set: return "EmptyKeywordSet";
    case errc::persona_formation_failure: return "PersonaFormationFailure";
    case errc::config_invalid: return "ConfigInvalid";
    case errc::unknown_setup: return "UnknownSetup";
    case errc::snapshot_malformed: return "SnapshotMalformed";
    case errc::single_class_training: return "SingleClassTraining";
    case errc::insufficient_samples: return "InsufficientSamples";
    case errc::wrong_model_kind: return "WrongModelKind";
    case errc::schema_mismatch: return "SchemaMismatch";
    case errc::incomplete_stage: return "IncompleteStage";
    case errc::stage_overrun: return "StageOverrun";
    case errc::ecosystem_unavailable: return "EcosystemUnavailable";
    case errc::io_failure: return "IoFailure";
    }
    return "UnknownError";
}

} // namespace cdt
