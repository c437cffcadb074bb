# Ring Road Wave Simulator - Reports Package
