"""Exercise the permap extension against the bundled fixtures."""

import pathlib
import tempfile

import permap

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def main():
    assert permap.canonicalize_permission("Manifest.permission.CAMERA") == "android.permission.CAMERA"
    try:
        permap.canonicalize_permission("not a permission!")
    except ValueError:
        pass
    else:
        raise AssertionError("invalid permission accepted")

    msg = "SecurityException: android.hardware.CameraDevice.startRecording requires android.permission.CAMERA"
    assert permap.parse_security_exception(msg) == ["android.permission.CAMERA"]

    verdict = permap.parse_verdict('{"requires_permission": true, "permissions": ["INTERNET"]}', role="analyst")
    assert verdict["permissions"] == ["android.permission.INTERNET"], verdict
    assert verdict["parse_path"] == "strict"

    store = permap.Store.scan(str(FIXTURES / "sdk-mini" / "corpus.json"))
    assert len(store) == 40 and store.sdk_version == 10, store
    assert store.analyze_with_mock(str(FIXTURES / "oracle.json")) == 7
    summary = store.verify_with_mock(str(FIXTURES / "oracle.json"), str(FIXTURES / "oracle.json"), str(FIXTURES / "snippets"))
    assert len(summary["verified"]) == 7, summary

    camera = store.query(permission="RECORD_AUDIO")
    assert [m["signature"] for m in camera] == ["android.hardware.CameraDevice#startRecording(String)"]
    assert camera[0]["confidence"] == "verified"
    assert len(store.query(jni_only=True)) == 1

    assert store.distribution()["total"] == 7
    assert store.annotation_gap()["new_discoveries"] == 1
    assert store.doc_gap(str(FIXTURES / "docs"))["annotated_total"] == 3
    overlap = store.overlap(str(FIXTURES / "baseline" / "baseline.txt"))
    assert (overlap["same"], overlap["baseline_only"]) == (3, 1), overlap

    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "sdk-mini.pmdb.jsonl"
        store.save(str(path))
        again = permap.Store.load(str(path))
        assert again.to_jsonl() == store.to_jsonl()
        assert store.diff(again)["added"] == []

    print("python smoke test passed")


if __name__ == "__main__":
    main()
