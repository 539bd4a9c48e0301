from .manifest import DatasetManifest, ManifestEntry, ManifestError, load_manifest, save_manifest
from .synth import (
    BonafideConfig,
    FrozenDecoder,
    SpoofGeneratorConfig,
    bonafide_parts,
    build_corpus,
    gen_bonafide,
    gen_spoof,
)
