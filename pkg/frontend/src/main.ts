import { TeachingApi } from "./api";
import { TeachingApp } from "./app";
import "./style.css";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// served by the teaching service itself by default; override for vite dev
const baseUrl = import.meta.env.VITE_API_URL ?? "";
const api = new TeachingApi(baseUrl);
const app = new TeachingApp(root, api);
app.onSession = (id) => {
  window.location.hash = id;
};

const resumeId = window.location.hash.replace(/^#/, "") || undefined;
void app.start(resumeId);
