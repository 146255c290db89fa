"""
Isoradial embeddings
====================

Generate finite patches of the three periodic rhombic tilings, certify
unit circumradii and the angle window, and round-trip the text format.
"""

from rangelab import isoradial as iso
from rangelab.graphs import make_graph

for kind in ("square", "triangular", "hexagonal"):
    g = iso.generate_isoradial(kind, 3)
    cert = iso.verify_isoradial(g)
    lo, hi = cert.theta_range
    c1, c2, d1, d2 = iso.edge_and_dual_bounds(cert)
    print(f"{kind:10s} passed={cert.passed}  theta in [{lo:.4f}, {hi:.4f}]  edges {c1:.4f}..{c2:.4f}  dual {d1:.4f}..{d2:.4f}")

# nudging one vertex breaks the certificate
bad = iso.displace(iso.generate_isoradial("square", 2), 0, (1e-3, 0.0))
print("\ndisplaced square patch passes:", iso.verify_isoradial(bad).passed)

# the stricter pi/4 window excludes the square tiling itself
strict = iso.verify_isoradial(iso.generate_isoradial("square", 2), window_upper=iso.LITERAL_UPPER)
print("square patch under the pi/4 window:", strict.passed)

text = iso.format_embedded(iso.generate_isoradial("hexagonal", 1))
print("\n" + "\n".join(text.splitlines()[:6]) + "\n...")
again = iso.parse_embedded(text)
print("round trip faces:", len(again.faces))

scan = iso.isoperimetric_scan(make_graph("square"), iso.square_blocks(16))
print("min |dA| / |A|^(1/2) over square blocks:", scan["min_ratio"])
