import pytest

from finfoed.data import DatasetManifest, ManifestEntry, ManifestError, load_manifest, save_manifest


def _entries():
    return [ManifestEntry("train/a.wav", "bonafide", "train"),
            ManifestEntry("train/b.wav", "spoof", "train"),
            ManifestEntry("eval/c.wav", "spoof", "eval")]


def test_round_trip(tmp_path):
    m = DatasetManifest(_entries(), root=tmp_path)
    save_manifest(m, tmp_path / "m.csv")
    text = (tmp_path / "m.csv").read_bytes()
    assert text.startswith(b"path,label,subset\n") and b"\r" not in text
    loaded = load_manifest(tmp_path / "m.csv", check_files=False)
    assert loaded.entries == m.entries and loaded.root == tmp_path


def test_unknown_label_reports_row(tmp_path):
    (tmp_path / "m.csv").write_text("path,label,subset\na.wav,spoof,train\nb.wav,fake,train\n")
    with pytest.raises(ManifestError, match="row 3: unknown label 'fake'"):
        load_manifest(tmp_path / "m.csv", check_files=False)


def test_empty_file_rejected(tmp_path):
    (tmp_path / "m.csv").write_text("")
    with pytest.raises(ManifestError, match="empty"):
        load_manifest(tmp_path / "m.csv")


def test_bad_header_rejected(tmp_path):
    (tmp_path / "m.csv").write_text("file,label,subset\n")
    with pytest.raises(ManifestError, match="header"):
        load_manifest(tmp_path / "m.csv")


def test_duplicate_paths_rejected(tmp_path):
    (tmp_path / "m.csv").write_text("path,label,subset\na.wav,spoof,train\na.wav,spoof,dev\n")
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(tmp_path / "m.csv", check_files=False)


def test_missing_files_listed(tmp_path):
    (tmp_path / "m.csv").write_text("path,label,subset\na.wav,spoof,train\nb.wav,spoof,train\n")
    with pytest.raises(ManifestError) as err:
        load_manifest(tmp_path / "m.csv")
    assert "a.wav" in str(err.value) and "b.wav" in str(err.value)


def test_missing_manifest_file(tmp_path):
    with pytest.raises(ManifestError, match="cannot read"):
        load_manifest(tmp_path / "nope.csv")


def test_require_subsets():
    m = DatasetManifest(_entries())
    m.require_subsets("train", "eval")
    with pytest.raises(ManifestError, match="dev"):
        m.require_subsets("train", "dev")


def test_save_validates(tmp_path):
    bad = DatasetManifest([ManifestEntry("a.wav", "real", "train")])
    with pytest.raises(ManifestError):
        save_manifest(bad, tmp_path / "m.csv")
