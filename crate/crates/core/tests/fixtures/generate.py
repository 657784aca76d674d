"""Regenerates the NPY fixtures and reference values used by the integration
tests. Requires numpy, scikit-image and opencv-python.

    python3 tests/fixtures/generate.py
"""
import json
from pathlib import Path

import cv2
import numpy as np
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

HERE = Path(__file__).parent
rng = np.random.default_rng(20240601)


def save(name, arr):
    np.save(HERE / name, arr)


# byte-exact reader/writer fixtures
save("small_u2.npy", (np.arange(48, dtype="<u2") * 1000).reshape(2, 2, 12))
save("random_u2.npy", rng.integers(0, 65536, size=(256, 256), dtype="<u2"))
save("label_u1.npy", np.array([[0, 0, 1, 1]] * 4, dtype=np.uint8))
save("float_f4.npy", (np.arange(9, dtype="<f4") / 4).reshape(3, 3))
save("vector_f8.npy", np.array([0.5, 1.5, 2.5], dtype="<f8"))
save("fortran_f8.npy", np.asfortranarray(np.arange(6, dtype="<f8").reshape(2, 3)))
save("unsupported_i8.npy", np.arange(4, dtype="<i8"))

# metric pairs: sparse binary edges against noisy magnitude maps
pairs = []
for k in range(6):
    h, w = 24 + 4 * k, 40 - 2 * k
    ref = np.where(rng.random((h, w)) < 0.08, 255, 0).astype(np.uint8)
    det = np.clip(ref * rng.random((h, w)) + rng.normal(0, 30, (h, w)), 0, 255).astype(np.uint8)
    save(f"pair{k}_ref.npy", ref)
    save(f"pair{k}_det.npy", det)
    pairs.append({
        "ref": f"pair{k}_ref.npy",
        "det": f"pair{k}_det.npy",
        "psnr": float(peak_signal_noise_ratio(ref, det, data_range=255)),
        "ssim": float(structural_similarity(
            det, ref, data_range=255, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False)),
    })

# preprocessing and gradient references
img = rng.integers(0, 256, size=(30, 40), dtype=np.uint8)
skewed = np.clip(rng.gamma(1.5, 20, size=(30, 40)), 0, 255).astype(np.uint8)
save("image_u1.npy", img)
save("skewed_u1.npy", skewed)
save("blur_cv2.npy", cv2.GaussianBlur(img.astype(np.float64), (5, 5), 1.0,
                                      borderType=cv2.BORDER_REPLICATE))
save("equalize_cv2.npy", cv2.equalizeHist(skewed))
f = img.astype(np.float64)
grads = {
    "sobel": (cv2.Sobel(f, cv2.CV_64F, 1, 0, ksize=3, borderType=cv2.BORDER_REPLICATE),
              cv2.Sobel(f, cv2.CV_64F, 0, 1, ksize=3, borderType=cv2.BORDER_REPLICATE)),
    "scharr": (cv2.Scharr(f, cv2.CV_64F, 1, 0, borderType=cv2.BORDER_REPLICATE),
               cv2.Scharr(f, cv2.CV_64F, 0, 1, borderType=cv2.BORDER_REPLICATE)),
}
prewitt_x = np.array([[-1, 0, 1]] * 3, dtype=np.float64)
grads["prewitt"] = (cv2.filter2D(f, -1, prewitt_x, borderType=cv2.BORDER_REPLICATE),
                    cv2.filter2D(f, -1, prewitt_x.T, borderType=cv2.BORDER_REPLICATE))
for name, (gx, gy) in grads.items():
    save(f"magnitude_{name}.npy", np.hypot(gx, gy))

(HERE / "reference.json").write_text(json.dumps({"pairs": pairs}, indent=2) + "\n")
