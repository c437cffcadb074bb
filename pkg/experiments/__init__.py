# Ring Road Wave Simulator - Experiments Package
